#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pseudopost/design.hpp"
#include "pseudopost/population.hpp"

namespace pseudopost {

// Current state of the Gibbs sampler for the count-data model.
struct McmcState {
  Eigen::MatrixXd log_rates;   // n x D latent log-means of the sampled units
  Eigen::MatrixXd coeffs;      // P x D regression coefficients
  Eigen::MatrixXd resid_prec;  // D x D residual precision
  Eigen::MatrixXd pred_prec;   // P x P precision across predictors
  double coeff_shrink = 1.0;   // scalar precision multiplier on coeffs

  void validate() const;
};

struct FitConfig {
  int n_iter = 5000;
  int burn_in = 2500;
  int thin = 1;
  std::uint64_t seed = 0;
  // true: each unit's likelihood contribution is exponentiated by its
  // normalized weight (and the weight scales its latent-residual prior
  // precision).  false: all weights are treated as 1, which is the
  // estimator one would use on a fully observed population.
  bool weighted = true;
  int n_workers = 1;

  int retained() const { return (n_iter - burn_in) / thin; }
  void validate() const;
};

struct ScalarSummary {
  std::string name;
  double mean = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

struct PosteriorDraws {
  // One row per retained iteration.  Coefficients are flattened
  // column-major: entry (p, d) lands in column d * P + p.
  Eigen::MatrixXd coeff_draws;
  // Residual precision entries: the D diagonal entries first, then the
  // strict lower triangle column-major.
  Eigen::MatrixXd resid_prec_draws;
  Eigen::VectorXd shrink_draws;
  int n_predictors = 0;
  int n_outcomes = 0;
  std::vector<ScalarSummary> summaries;  // coeffs, resid precision, shrink

  int n_retained() const { return static_cast<int>(coeff_draws.rows()); }

  Eigen::MatrixXd coeff_mean() const;          // P x D posterior mean
  Eigen::MatrixXd resid_prec_mean() const;     // D x D posterior mean
  const ScalarSummary& summary(const std::string& name) const;
};

// Names used for draw columns and summaries: b_<p>_<d> (1-based),
// lambda_<i>_<j>, tau.
std::string coeff_name(int p, int d);
std::string resid_prec_name(int i, int j);

// Deterministic initialization: log_rates at log(y + 0.5), coeffs at the
// weight-scaled least-squares fit of log_rates on the covariates,
// precisions at identity, shrink at 1.
McmcState init_state(const ObservedSample& sample, std::uint64_t seed);

// One sweep of each full-conditional update.  `weighted` switches between
// the weight-exponentiated likelihood and the plain one; each function
// draws from the exact full conditional of the blocked sampler.
void update_log_rates(McmcState* state, const ObservedSample& sample,
                      bool weighted, std::uint64_t seed, std::uint64_t iter,
                      int n_workers = 1);
void update_coeffs(McmcState* state, const ObservedSample& sample,
                   bool weighted, std::uint64_t seed, std::uint64_t iter);
void update_resid_prec(McmcState* state, const ObservedSample& sample,
                       bool weighted, std::uint64_t seed, std::uint64_t iter);
void update_coeff_shrink(McmcState* state, std::uint64_t seed,
                         std::uint64_t iter);
void update_pred_prec(McmcState* state, std::uint64_t seed, std::uint64_t iter);

// Runs the Gibbs sampler: sweep order log_rates -> coeffs -> resid_prec ->
// coeff_shrink -> pred_prec, retaining post-burn-in draws every `thin`
// iterations, with means and equal-tailed 95% intervals.
PosteriorDraws fit(const ObservedSample& sample, const FitConfig& config);

}  // namespace pseudopost
