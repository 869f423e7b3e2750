#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "pseudopost/errors.hpp"
#include "pseudopost/linalg.hpp"
#include "pseudopost/rng.hpp"

namespace pseudopost {

// Draws from N(mean, precision^-1) given the Cholesky factor of the
// precision: x = mean + L^-T z with z iid standard normal.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean,
                           const CholeskyFactor& precision_chol,
                           RngStream& rng);

// Draws a P x D matrix-variate normal with separable precision: the
// vectorized draw has covariance (col_prec ⊗ row_prec)^-1.
Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& mean,
                                     const CholeskyFactor& row_prec_chol,
                                     const CholeskyFactor& col_prec_chol,
                                     RngStream& rng);

// Wishart draw with expectation df * scale, via the Bartlett construction.
// Non-integer df is supported (required: conditional degrees of freedom
// involve sums of real-valued weights); df must exceed dim - 1.
Eigen::MatrixXd sample_wishart(double df, const Eigen::MatrixXd& scale,
                               RngStream& rng);

// Target for the elliptical slice sampler: arbitrary log-likelihood plus a
// Gaussian prior supplied in precision-Cholesky form.
struct EssTarget {
  std::function<double(const Eigen::VectorXd&)> log_likelihood;
  Eigen::VectorXd prior_mean;
  const CholeskyFactor* prior_precision_chol = nullptr;
};

// One elliptical slice transition.  Rejection-free and tuning-free: draw an
// auxiliary point from the prior, pick a log threshold under the current
// likelihood, then walk an angle bracket that shrinks toward the current
// state until a point on the ellipse clears the threshold.  Templated on
// the likelihood callable so the hot path avoids std::function dispatch.
template <typename LogLik>
Eigen::VectorXd ess_step_impl(const Eigen::VectorXd& current, LogLik&& log_lik,
                              const Eigen::VectorXd& prior_mean,
                              const CholeskyFactor& prior_precision_chol,
                              RngStream& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;

  const double current_ll = log_lik(current);
  if (!std::isfinite(current_ll)) {
    throw NumericalError(
        "ess_step: log-likelihood at the current state is not finite");
  }

  Eigen::VectorXd z(current.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const Eigen::VectorXd nu = prior_precision_chol.solve_transposed(z);

  const double log_threshold = current_ll + std::log(rng.uniform());

  double theta = rng.uniform(0.0, kTwoPi);
  double theta_min = theta - kTwoPi;
  double theta_max = theta;

  const Eigen::VectorXd centered = current - prior_mean;
  Eigen::VectorXd proposal(current.size());
  for (int iter = 0; iter < 1000; ++iter) {
    proposal = prior_mean + std::cos(theta) * centered + std::sin(theta) * nu;
    if (log_lik(proposal) > log_threshold) return proposal;
    if (theta < 0.0) {
      theta_min = theta;
    } else {
      theta_max = theta;
    }
    theta = rng.uniform(theta_min, theta_max);
  }
  throw NumericalError(
      "ess_step: bracket failed to close after 1000 shrink steps");
}

Eigen::VectorXd ess_step(const Eigen::VectorXd& current, const EssTarget& target,
                         RngStream& rng);

}  // namespace pseudopost
