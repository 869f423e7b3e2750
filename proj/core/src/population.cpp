#include "pseudopost/population.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pseudopost/errors.hpp"
#include "pseudopost/linalg.hpp"
#include "pseudopost/parallel.hpp"
#include "pseudopost/rng.hpp"

namespace pseudopost {

namespace {

// Seed-path tag separating population generation from other consumers.
constexpr std::uint64_t kPopulationTag = 0x706f70;

int pick_category(double u, const std::array<double, 4>& probs) {
  double total = 0.0;
  for (double p : probs) total += p;
  double cum = 0.0;
  for (int c = 0; c < 3; ++c) {
    cum += probs[static_cast<std::size_t>(c)] / total;
    if (u < cum) return c;
  }
  return 3;
}

void check_probs(const std::array<double, 4>& probs, const char* what) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {
      throw ConfigError(std::string("ModelConfig: ") + what +
                        " has a negative category probability");
    }
    total += p;
  }
  if (!(total > 0.0)) {
    throw ConfigError(std::string("ModelConfig: ") + what +
                      " probabilities sum to zero");
  }
}

}  // namespace

void GeneratingParams::validate() const {
  if (coeffs.rows() < 1 || coeffs.cols() < 1) {
    throw ConfigError("GeneratingParams: coeffs must be a non-empty P x D matrix");
  }
  if (!coeffs.allFinite()) {
    throw ConfigError("GeneratingParams: coeffs has non-finite entries");
  }
  if (resid_prec.rows() != coeffs.cols() || resid_prec.cols() != coeffs.cols()) {
    throw ConfigError("GeneratingParams: resid_prec must be D x D");
  }
  if (pred_prec.rows() != coeffs.rows() || pred_prec.cols() != coeffs.rows()) {
    throw ConfigError("GeneratingParams: pred_prec must be P x P");
  }
  if (!is_spd(resid_prec)) {
    throw ConfigError(
        "GeneratingParams: resid_prec failed the symmetric positive-definite "
        "check");
  }
  if (!is_spd(pred_prec)) {
    throw ConfigError(
        "GeneratingParams: pred_prec failed the symmetric positive-definite "
        "check");
  }
  if (!(coeff_shrink > 0.0)) {
    throw ConfigError("GeneratingParams: coeff_shrink must be positive");
  }
}

void ModelConfig::validate() const {
  if (n_units < 1) throw ConfigError("ModelConfig: n_units must be >= 1");
  if (n_outcomes < 1) throw ConfigError("ModelConfig: n_outcomes must be >= 1");
  if (n_predictors < 1) {
    throw ConfigError("ModelConfig: n_predictors must be >= 1");
  }
  if (n_predictors > n_units) {
    throw ConfigError("ModelConfig: n_predictors exceeds n_units");
  }
  if (!(mean_cap > 0.0)) throw ConfigError("ModelConfig: mean_cap must be positive");
  if (!(recipe.log_size_scale >= 0.0)) {
    throw ConfigError("ModelConfig: recipe.log_size_scale must be >= 0");
  }
  if (!(recipe.log_size_clamp > 0.0)) {
    throw ConfigError("ModelConfig: recipe.log_size_clamp must be positive");
  }
  if (!(recipe.open_noise_sd >= 0.0)) {
    throw ConfigError("ModelConfig: recipe.open_noise_sd must be >= 0");
  }
  if (!(recipe.size_floor > 0.0)) {
    throw ConfigError("ModelConfig: recipe.size_floor must be positive");
  }
  if (!(recipe.size_noise_floor > 0.0) || recipe.size_noise_floor > 1.0) {
    throw ConfigError("ModelConfig: recipe.size_noise_floor must be in (0, 1]");
  }
  check_probs(recipe.region_probs, "region");
  check_probs(recipe.ownership_probs, "ownership");
}

void FinitePopulation::validate() const {
  const int n = n_units();
  if (n < 1) throw ConfigError("FinitePopulation: empty population");
  if (responses.rows() != n || size_measure.size() != n) {
    throw ConfigError(
        "FinitePopulation: responses, covariates, and size_measure row counts "
        "disagree");
  }
  const int d = n_outcomes();
  const int p = n_predictors();
  if (d < 1) throw ConfigError("FinitePopulation: no response columns");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      if (responses(i, j) < 0) {
        throw ConfigError("FinitePopulation: negative count at unit " +
                          std::to_string(i + 1) + ", response " +
                          std::to_string(j + 1));
      }
    }
    if (!(size_measure[i] > 0.0)) {
      throw ConfigError("FinitePopulation: non-positive size_measure at unit " +
                        std::to_string(i + 1));
    }
  }
  if (!covariates.allFinite()) {
    throw ConfigError("FinitePopulation: covariates contain non-finite values");
  }
  if (p > n) {
    throw ConfigError("FinitePopulation: more covariate columns than units");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(covariates);
  const int rank = static_cast<int>(qr.rank());
  if (rank < p) {
    throw ConfigError("FinitePopulation: covariates are rank deficient "
                      "(computed rank " +
                      std::to_string(rank) + " < " + std::to_string(p) +
                      " columns)");
  }
  if (true_params) {
    if (true_params->coeffs.rows() != p || true_params->coeffs.cols() != d) {
      throw ConfigError(
          "FinitePopulation: true_params dimensions do not match the data");
    }
    true_params->validate();
  }
}

GeneratingParams default_generating_params() {
  constexpr int p = kRecipePredictors;
  constexpr int d = 2;
  GeneratingParams params;
  params.coeffs.resize(p, d);
  // Columns: hires, separations.  Rows follow the recipe layout:
  // intercept, 3 region dummies, 3 ownership dummies, log employment,
  // log openings.  Counts scale sublinearly with employment (turnover rates
  // fall as establishments grow), hiring runs slightly ahead of separations,
  // and government ownership turns over less than private.
  params.coeffs.col(0) << 0.24, 0.10, -0.05, 0.05, -0.35, -0.25, 0.30, 0.50,
      0.10;
  params.coeffs.col(1) << 0.05, 0.08, -0.02, 0.06, -0.30, -0.20, 0.25, 0.55,
      0.05;

  // Latent residual scale 0.7 per outcome with correlation 0.5: hiring and
  // separation shocks co-move (units with churn have both).
  Eigen::MatrixXd resid_cov(d, d);
  resid_cov << 0.49, 0.245, 0.245, 0.49;
  params.resid_prec = spd_inverse(resid_cov, "residual covariance");

  params.coeff_shrink = 1.0;
  params.pred_prec = Eigen::MatrixXd::Identity(p, p);
  return params;
}

FinitePopulation generate_population_from_frame(const PopulationFrame& frame,
                                                const GeneratingParams& params,
                                                double mean_cap,
                                                std::uint64_t seed,
                                                int n_workers) {
  params.validate();
  const int n = static_cast<int>(frame.covariates.rows());
  const int p = static_cast<int>(frame.covariates.cols());
  const int d = static_cast<int>(params.coeffs.cols());
  if (n < 1) throw ConfigError("generate_population_from_frame: empty frame");
  if (frame.size_measure.size() != n) {
    throw ConfigError(
        "generate_population_from_frame: size_measure length does not match "
        "the covariate rows");
  }
  if (params.coeffs.rows() != p) {
    throw ConfigError(
        "generate_population_from_frame: coeffs rows do not match the "
        "covariate columns");
  }
  if (!(mean_cap > 0.0)) {
    throw ConfigError("generate_population_from_frame: mean_cap must be positive");
  }

  const CholeskyFactor resid_chol = cholesky(params.resid_prec, "resid_prec");

  FinitePopulation pop;
  pop.covariates = frame.covariates;
  pop.size_measure = frame.size_measure;
  pop.responses.resize(n, d);
  pop.true_params = params;

  parallel_for(n, n_workers, [&](std::int64_t i) {
    RngStream rs(derive_seed(seed, kPopulationTag, static_cast<std::uint64_t>(i)));
    Eigen::VectorXd z(d);
    for (int k = 0; k < d; ++k) z[k] = rs.normal();
    const Eigen::VectorXd resid = resid_chol.solve_transposed(z);
    const Eigen::VectorXd log_rate =
        params.coeffs.transpose() * pop.covariates.row(i).transpose() + resid;
    for (int k = 0; k < d; ++k) {
      const double mean = std::exp(log_rate[k]);
      if (!(mean <= mean_cap)) {
        throw ConfigError("population generation: unit " + std::to_string(i + 1) +
                          ", response " + std::to_string(k + 1) +
                          " has mean " + std::to_string(mean) +
                          " above the mean cap " + std::to_string(mean_cap) +
                          " (parameters appear miscalibrated)");
      }
      pop.responses(i, k) = rs.poisson(mean);
    }
  });
  return pop;
}

FinitePopulation generate_population(const ModelConfig& config,
                                     const GeneratingParams& params,
                                     std::uint64_t seed, int n_workers) {
  config.validate();
  params.validate();
  if (config.n_predictors != kRecipePredictors) {
    throw ConfigError(
        "generate_population: the synthetic frame recipe produces " +
        std::to_string(kRecipePredictors) +
        " covariate columns; configure n_predictors accordingly or use "
        "generate_population_from_frame");
  }
  if (params.coeffs.rows() != config.n_predictors ||
      params.coeffs.cols() != config.n_outcomes) {
    throw ConfigError(
        "generate_population: params dimensions disagree with the config");
  }

  const int n = config.n_units;
  const int d = config.n_outcomes;
  const CovariateRecipe& recipe = config.recipe;
  const CholeskyFactor resid_chol = cholesky(params.resid_prec, "resid_prec");

  FinitePopulation pop;
  pop.covariates.resize(n, kRecipePredictors);
  pop.size_measure.resize(n);
  pop.responses.resize(n, d);
  pop.true_params = params;

  parallel_for(n, n_workers, [&](std::int64_t i) {
    RngStream rs(derive_seed(seed, kPopulationTag, static_cast<std::uint64_t>(i)));

    const double half_width = recipe.log_size_clamp * recipe.log_size_scale;
    const double log_emp = recipe.log_size_location +
                           std::clamp(recipe.log_size_scale * rs.normal(),
                                      -half_width, half_width);
    const int region = pick_category(rs.uniform(), recipe.region_probs);
    const int ownership = pick_category(rs.uniform(), recipe.ownership_probs);
    const double log_open = log_emp + recipe.open_noise_sd * rs.normal();

    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(kRecipePredictors);
    x[kInterceptColumn] = 1.0;
    if (region > 0) x[kRegionColumns + region - 1] = 1.0;
    if (ownership > 0) x[kOwnershipColumns + ownership - 1] = 1.0;
    x[kEmploymentColumn] = log_emp;
    x[kOpeningsColumn] = log_open;
    pop.covariates.row(i) = x;

    Eigen::VectorXd z(d);
    for (int k = 0; k < d; ++k) z[k] = rs.normal();
    const Eigen::VectorXd resid = resid_chol.solve_transposed(z);
    const Eigen::VectorXd log_rate = params.coeffs.transpose() * x.transpose() + resid;
    for (int k = 0; k < d; ++k) {
      const double mean = std::exp(log_rate[k]);
      if (!(mean <= config.mean_cap)) {
        throw ConfigError("generate_population: unit " + std::to_string(i + 1) +
                          ", response " + std::to_string(k + 1) +
                          " has mean " + std::to_string(mean) +
                          " above the mean cap " +
                          std::to_string(config.mean_cap) +
                          " (parameters appear miscalibrated)");
      }
      pop.responses(i, k) = rs.poisson(mean);
    }

    // The pps size measure: employment scale plus a floor component shocked
    // by the first outcome's latent residual.  Small units' frame sizes are
    // noisy in a way that tracks their response, so selection carries
    // response signal the covariates do not; large units' sizes follow
    // employment directly.  The shock's lower bound keeps the smallest sizes
    // pinned near the floor.
    const double shock = std::max(
        std::exp(recipe.size_coupling * resid[0]), recipe.size_noise_floor);
    pop.size_measure[i] = recipe.size_floor * shock + std::exp(log_emp);
  });
  return pop;
}

}  // namespace pseudopost
