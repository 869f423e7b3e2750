#include "pseudopost/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pseudopost/errors.hpp"
#include "pseudopost/linalg.hpp"
#include "pseudopost/parallel.hpp"

namespace pseudopost {

namespace {

constexpr int kGhNodes = 32;

struct GhRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Gauss-Hermite rule from the symmetric tridiagonal Jacobi matrix; nodes are
// its eigenvalues and weights come from the first eigenvector components.
const GhRule& gh_rule() {
  static const GhRule rule = [] {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(kGhNodes, kGhNodes);
    for (int k = 0; k + 1 < kGhNodes; ++k) {
      const double b = std::sqrt(0.5 * static_cast<double>(k + 1));
      j(k, k + 1) = b;
      j(k + 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    GhRule r;
    r.nodes = es.eigenvalues();
    r.weights.resize(kGhNodes);
    const double sqrt_pi = std::sqrt(3.14159265358979323846);
    for (int k = 0; k < kGhNodes; ++k) {
      const double v0 = es.eigenvectors()(0, k);
      r.weights[k] = sqrt_pi * v0 * v0;
    }
    return r;
  }();
  return rule;
}

// Mode of the latent integrand y*psi - e^psi - (psi - mu)^2 / (2 sigma^2);
// the derivative is strictly decreasing, so bisection is safe.
double latent_mode(double y, double mu, double sigma2) {
  const auto deriv = [&](double psi) {
    return y - std::exp(psi) - (psi - mu) / sigma2;
  };
  double lo = std::min(mu, std::log(y + 0.5));
  double step = 1.0;
  while (deriv(lo) <= 0.0) {
    lo -= step;
    step *= 2.0;
  }
  double hi = std::max(mu, std::log(y + 1.0));
  step = 1.0;
  while (deriv(hi) >= 0.0) {
    hi += step;
    step *= 2.0;
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (deriv(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Beyond this count the Bhattacharyya sums switch to a strided evaluation;
// at those scales the mixed density varies slowly across adjacent counts.
constexpr std::int64_t kExactTerms = 20000;
constexpr std::int64_t kStridedBuckets = 20000;

}  // namespace

double hellinger_sq(const std::function<double(double)>& p1,
                    const std::function<double(double)>& p2,
                    const std::vector<double>& support) {
  if (!p1 || !p2) throw ConfigError("hellinger_sq: missing density evaluator");
  if (support.empty()) throw ConfigError("hellinger_sq: empty support grid");

  double mass1 = 0.0;
  double mass2 = 0.0;
  double total = 0.0;
  for (double x : support) {
    const double a = p1(x);
    const double b = p2(x);
    if (!(a >= 0.0) || !(b >= 0.0)) {
      throw NumericalError("hellinger_sq: negative density value on the grid");
    }
    mass1 += a;
    mass2 += b;
    const double diff = std::sqrt(a) - std::sqrt(b);
    total += diff * diff;
  }
  if (std::abs(mass1 - 1.0) > 1e-6 || std::abs(mass2 - 1.0) > 1e-6) {
    throw ConfigError("hellinger_sq: densities place mass " +
                      std::to_string(mass1) + " and " + std::to_string(mass2) +
                      " on the support (each must be within 1e-6 of 1)");
  }
  return total;
}

UnitDensityModel::UnitDensityModel(Eigen::MatrixXd unit_log_means,
                                   Eigen::VectorXd dim_sds)
    : log_means_(std::move(unit_log_means)), dim_sds_(std::move(dim_sds)) {
  if (log_means_.cols() != dim_sds_.size()) {
    throw ConfigError(
        "UnitDensityModel: log-mean columns and dim_sds length disagree");
  }
  for (Eigen::Index k = 0; k < dim_sds_.size(); ++k) {
    if (!(dim_sds_[k] >= 0.0)) {
      throw ConfigError("UnitDensityModel: negative latent sd");
    }
  }
}

UnitDensityModel UnitDensityModel::from_params(const Eigen::MatrixXd& covariates,
                                               const Eigen::MatrixXd& coeffs,
                                               const Eigen::MatrixXd& resid_prec) {
  if (covariates.cols() != coeffs.rows()) {
    throw ConfigError("UnitDensityModel: covariates and coeffs disagree");
  }
  const Eigen::MatrixXd cov = spd_inverse(resid_prec, "resid_prec");
  return UnitDensityModel(covariates * coeffs, cov.diagonal().cwiseSqrt());
}

double UnitDensityModel::pmf(int unit, int dim, std::int64_t y) const {
  const double mu = log_means_(unit, dim);
  const double sd = dim_sds_[dim];
  const double yy = static_cast<double>(y);
  const double lg = std::lgamma(yy + 1.0);

  if (sd < 1e-8) {
    // Degenerate latent: plain Poisson(e^mu).
    return std::exp(yy * mu - std::exp(mu) - lg);
  }

  const double sigma2 = sd * sd;
  const double mode = latent_mode(yy, mu, sigma2);
  const double curvature = std::exp(mode) + 1.0 / sigma2;
  const double s = 1.0 / std::sqrt(curvature);
  const GhRule& rule = gh_rule();

  const double log_norm =
      -lg - 0.5 * std::log(2.0 * 3.14159265358979323846 * sigma2);
  double exponents[kGhNodes];
  double max_e = -std::numeric_limits<double>::infinity();
  const double sqrt2_s = std::sqrt(2.0) * s;
  for (int k = 0; k < kGhNodes; ++k) {
    const double t = rule.nodes[k];
    const double psi = mode + sqrt2_s * t;
    const double dmu = psi - mu;
    const double log_g =
        yy * psi - std::exp(psi) + log_norm - dmu * dmu / (2.0 * sigma2);
    exponents[k] = log_g + t * t;
    if (exponents[k] > max_e) max_e = exponents[k];
  }
  if (!std::isfinite(max_e)) return 0.0;
  double acc = 0.0;
  for (int k = 0; k < kGhNodes; ++k) {
    acc += rule.weights[k] * std::exp(exponents[k] - max_e);
  }
  const double p = sqrt2_s * std::exp(max_e) * acc;
  return (p > 0.0) ? p : 0.0;
}

std::int64_t UnitDensityModel::grid_bound(int unit, int dim) const {
  const double mu = log_means_(unit, dim);
  const double sd = dim_sds_[dim];
  // Rate at the ~(1 - 5e-9) quantile of the latent lognormal, then the
  // Poisson upper tail on top of it; combined tail mass is ~1e-8.
  const double rate_q = std::exp(mu + 5.73 * sd);
  const double bound = rate_q + 6.0 * std::sqrt(rate_q) + 20.0;
  return static_cast<std::int64_t>(std::ceil(bound));
}

double unit_hellinger_sq(const UnitDensityModel& p1, const UnitDensityModel& p2,
                         int unit) {
  if (p1.n_dims() != p2.n_dims()) {
    throw ConfigError("unit_hellinger_sq: dimension mismatch");
  }
  double bc_product = 1.0;
  for (int dim = 0; dim < p1.n_dims(); ++dim) {
    const std::int64_t bound =
        std::max(p1.grid_bound(unit, dim), p2.grid_bound(unit, dim));
    double bc = 0.0;
    const std::int64_t exact_end = std::min(bound + 1, kExactTerms);
    for (std::int64_t y = 0; y < exact_end; ++y) {
      bc += std::sqrt(p1.pmf(unit, dim, y) * p2.pmf(unit, dim, y));
    }
    if (bound + 1 > kExactTerms) {
      const std::int64_t remaining = bound + 1 - kExactTerms;
      const std::int64_t stride =
          std::max<std::int64_t>(1, remaining / kStridedBuckets);
      for (std::int64_t y = kExactTerms; y <= bound; y += stride) {
        bc += static_cast<double>(stride) *
              std::sqrt(p1.pmf(unit, dim, y) * p2.pmf(unit, dim, y));
      }
    }
    bc_product *= std::min(bc, 1.0);
  }
  return 2.0 * (1.0 - bc_product);
}

double population_hellinger_sq(const UnitDensityModel& p1,
                               const UnitDensityModel& p2, int n_workers) {
  if (p1.n_units() != p2.n_units()) {
    throw ConfigError("population_hellinger_sq: unit counts disagree");
  }
  const int n = p1.n_units();
  Eigen::VectorXd d2(n);
  parallel_for(n, n_workers,
               [&](std::int64_t i) { d2[i] = unit_hellinger_sq(p1, p2, static_cast<int>(i)); });
  // Sequential reduction keeps the result independent of the worker count.
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += d2[i];
  return total / static_cast<double>(n);
}

double pseudo_hellinger_sq(const FinitePopulation& pop,
                           const ObservedSample& sample,
                           const UnitDensityModel& p1,
                           const UnitDensityModel& p2, int n_workers) {
  if (p1.n_units() != pop.n_units() || p2.n_units() != pop.n_units()) {
    throw ConfigError(
        "pseudo_hellinger_sq: density models do not cover the population");
  }
  const int n = sample.size();
  Eigen::VectorXd terms(n);
  parallel_for(n, n_workers, [&](std::int64_t k) {
    const int unit = sample.unit_ids[static_cast<std::size_t>(k)];
    terms[k] = unit_hellinger_sq(p1, p2, unit) / sample.pi[k];
  });
  double total = 0.0;
  for (int k = 0; k < n; ++k) total += terms[k];
  return total / static_cast<double>(pop.n_units());
}

double condition_gamma(const Eigen::VectorXd& pi) {
  if (pi.size() == 0) throw ConfigError("condition_gamma: empty probabilities");
  const double min_pi = pi.minCoeff();
  if (!(min_pi > 0.0)) {
    throw ConfigError(
        "condition_gamma: zero or negative inclusion probability (condition "
        "A4 violated)");
  }
  return 1.0 / min_pi;
}

double condition_sampling_fraction(int target_n, int n_units) {
  if (n_units < 1 || target_n < 1 || target_n > n_units) {
    throw ConfigError("condition_sampling_fraction: invalid sizes");
  }
  return static_cast<double>(target_n) / static_cast<double>(n_units);
}

std::vector<ContractionRow> contraction_curve(
    const FinitePopulation& pop, const std::vector<ContractionFit>& fits,
    int focus_row, int n_workers) {
  if (!pop.true_params) {
    throw ConfigError(
        "contraction_curve: population carries no generating parameters");
  }
  if (focus_row < 0 || focus_row >= pop.n_predictors()) {
    throw ConfigError("contraction_curve: focus_row out of range");
  }
  const GeneratingParams& truth = *pop.true_params;
  const UnitDensityModel true_model = UnitDensityModel::from_params(
      pop.covariates, truth.coeffs, truth.resid_prec);

  std::vector<ContractionRow> rows;
  rows.reserve(fits.size());
  for (const ContractionFit& fit : fits) {
    if (fit.coeff_mean.rows() != pop.n_predictors() ||
        fit.coeff_mean.cols() != pop.n_outcomes()) {
      throw ConfigError("contraction_curve: fit '" + fit.method +
                        "' has mismatched coefficient dimensions");
    }
    const UnitDensityModel fitted = UnitDensityModel::from_params(
        pop.covariates, fit.coeff_mean, fit.resid_prec_mean);
    ContractionRow row;
    row.n = fit.sample_size;
    row.method = fit.method;
    row.hellinger_sq =
        fit.sample != nullptr
            ? pseudo_hellinger_sq(pop, *fit.sample, fitted, true_model, n_workers)
            : population_hellinger_sq(fitted, true_model, n_workers);
    row.bias_emp_hires = fit.coeff_mean(focus_row, 0) - truth.coeffs(focus_row, 0);
    row.bias_emp_seps =
        pop.n_outcomes() > 1
            ? fit.coeff_mean(focus_row, 1) - truth.coeffs(focus_row, 1)
            : std::numeric_limits<double>::quiet_NaN();
    row.ci_width = fit.ci_width;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pseudopost
