#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pseudopost/design.hpp"
#include "pseudopost/population.hpp"

namespace pseudopost {

enum class HellingerVariant {
  kPopulation,  // plain average of unit distances over the frame
  kPseudo,      // inverse-probability-weighted average from one sample
  kAnalytic,    // closed form or direct grid evaluation
};

struct HellingerResult {
  double value = 0.0;  // squared distance, in [0, 2]
  HellingerVariant variant = HellingerVariant::kAnalytic;
};

// Squared Hellinger distance sum_grid (sqrt(p1) - sqrt(p2))^2 between two
// discrete densities on an explicit support grid.  Both evaluators must
// place total mass 1 on the grid within 1e-6.
double hellinger_sq(const std::function<double(double)>& p1,
                    const std::function<double(double)>& p2,
                    const std::vector<double>& support);

// Count densities for every unit of a frame: per unit and outcome dimension
// a 1-D Poisson-lognormal marginal pmf
//     p(y) = Integral Poisson(y | e^psi) N(psi; unit mean, sd^2) dpsi
// evaluated by mode-centered Gauss-Hermite quadrature.  The unit-level
// squared distance treats dimensions as independent (product of the
// per-dimension marginals), which composes through the product of
// per-dimension Bhattacharyya coefficients.
class UnitDensityModel {
 public:
  // unit_log_means: N x D latent means (covariates * coeffs); dim_sds: the
  // D marginal latent standard deviations.
  UnitDensityModel(Eigen::MatrixXd unit_log_means, Eigen::VectorXd dim_sds);

  // Convenience constructor from model parameters; resid_prec is inverted
  // to recover the marginal latent variances.
  static UnitDensityModel from_params(const Eigen::MatrixXd& covariates,
                                      const Eigen::MatrixXd& coeffs,
                                      const Eigen::MatrixXd& resid_prec);

  int n_units() const { return static_cast<int>(log_means_.rows()); }
  int n_dims() const { return static_cast<int>(log_means_.cols()); }

  double pmf(int unit, int dim, std::int64_t y) const;

  // Upper count bound holding all but ~1e-8 of the mass of (unit, dim).
  std::int64_t grid_bound(int unit, int dim) const;

 private:
  Eigen::MatrixXd log_means_;
  Eigen::VectorXd dim_sds_;
};

// Squared Hellinger distance between the two models' densities for one unit
// (2 * (1 - product of per-dimension Bhattacharyya coefficients)).
double unit_hellinger_sq(const UnitDensityModel& p1, const UnitDensityModel& p2,
                         int unit);

// Population average of unit distances: (1/N) sum_i d^2_i.
double population_hellinger_sq(const UnitDensityModel& p1,
                               const UnitDensityModel& p2, int n_workers = 1);

// Inverse-probability-weighted estimate of the population average from one
// sample: (1/N) sum_{i in sample} d^2_i / pi_i.  Unbiased over repeated
// sampling for any design with strictly positive inclusion probabilities.
double pseudo_hellinger_sq(const FinitePopulation& pop,
                           const ObservedSample& sample,
                           const UnitDensityModel& p1,
                           const UnitDensityModel& p2, int n_workers = 1);

// Contraction-condition statistics recomputed from raw probabilities.
double condition_gamma(const Eigen::VectorXd& pi);
double condition_sampling_fraction(int target_n, int n_units);

// One fitted model entering the contraction table.
struct ContractionFit {
  std::string method;
  int sample_size = 0;
  Eigen::MatrixXd coeff_mean;       // P x D posterior mean
  Eigen::MatrixXd resid_prec_mean;  // D x D posterior mean
  double ci_width = 0.0;            // average credible-interval width of the
                                    // focus coefficients
  const ObservedSample* sample = nullptr;  // optional: weighted distance
};

struct ContractionRow {
  int n = 0;
  std::string method;
  double hellinger_sq = 0.0;
  double bias_emp_hires = 0.0;
  double bias_emp_seps = 0.0;
  double ci_width = 0.0;
};

// Distance-to-truth and coefficient bias for each fit.  Requires
// pop.true_params; `focus_row` selects the coefficient row reported as the
// bias columns (default: the employment column of the synthetic recipe).
std::vector<ContractionRow> contraction_curve(
    const FinitePopulation& pop, const std::vector<ContractionFit>& fits,
    int focus_row = kEmploymentColumn, int n_workers = 1);

}  // namespace pseudopost
