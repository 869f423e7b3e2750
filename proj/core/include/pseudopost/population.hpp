#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace pseudopost {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Parameters of the count-data generating model:
//   y_id ~ Poisson(exp(psi_id)),  psi_i ~ N_D(coeffs' x_i, resid_prec^-1),
//   coeffs ~ matrix normal with row precision coeff_shrink * pred_prec-style
//   prior (pred_prec across predictors, resid_prec across outcomes).
struct GeneratingParams {
  Eigen::MatrixXd coeffs;      // P x D regression coefficients
  Eigen::MatrixXd resid_prec;  // D x D precision of the latent residuals
  double coeff_shrink = 1.0;   // scalar precision multiplier on the coefficients
  Eigen::MatrixXd pred_prec;   // P x P precision across predictors

  void validate() const;  // SPD checks, coeff_shrink > 0, dimension agreement
};

// Recipe for the default synthetic establishment frame.  The real survey
// frame is not public, so the frame is synthesized: a heavily right-skewed
// size variable (log-employment scale), region and ownership dummies, and a
// log-openings covariate that tracks log-employment.  The pps size measure
// couples to the first outcome's latent residual so that selection carries
// information about the response beyond the covariates — without that
// coupling the design would be ignorable given X and weighting would have
// nothing to correct.  Constants are calibrated to the published design
// characteristics (certainty counts, CV and correlations of the inclusion
// probabilities across the four sample sizes).
struct CovariateRecipe {
  double log_size_location = -0.6;
  double log_size_scale = 4.0;
  // Winsorization width, in units of log_size_scale.  A handful of extreme
  // draws would otherwise dominate population variances and destabilize the
  // design correlation diagnostics.
  double log_size_clamp = 3.0;
  double open_noise_sd = 1.0;
  double size_floor = 4.0;
  // Weight on the first-outcome latent residual inside the size measure's
  // multiplicative shock.
  double size_coupling = 2.4;
  // Lower bound on that shock, in (0, 1].  Keeps the smallest frame sizes
  // pinned to the employment floor so the minimum inclusion probability
  // stays bounded away from zero.
  double size_noise_floor = 0.7;
  // Category shares; index 0 is the reference level (no dummy column).
  std::array<double, 4> region_probs{0.17, 0.24, 0.26, 0.33};
  std::array<double, 4> ownership_probs{0.03, 0.05, 0.12, 0.80};
};

// Column layout produced by CovariateRecipe.
inline constexpr int kRecipePredictors = 9;
inline constexpr int kInterceptColumn = 0;
inline constexpr int kRegionColumns = 1;     // 1..3
inline constexpr int kOwnershipColumns = 4;  // 4..6
inline constexpr int kEmploymentColumn = 7;  // log employment-scale size
inline constexpr int kOpeningsColumn = 8;    // log openings

struct ModelConfig {
  int n_units = 8595;
  int n_outcomes = 2;    // D (hires, separations under the default recipe)
  int n_predictors = 9;  // P, including the intercept column
  double mean_cap = 1e9;  // reject generation when any exp(psi) exceeds this
  CovariateRecipe recipe;

  void validate() const;
};

struct FinitePopulation {
  CountMatrix responses;         // N x D non-negative counts
  Eigen::MatrixXd covariates;    // N x P design matrix, full column rank
  Eigen::VectorXd size_measure;  // N strictly positive pps sizes
  std::optional<GeneratingParams> true_params;

  int n_units() const { return static_cast<int>(covariates.rows()); }
  int n_outcomes() const { return static_cast<int>(responses.cols()); }
  int n_predictors() const { return static_cast<int>(covariates.cols()); }

  // Checks every structural invariant; throws ConfigError naming the first
  // violation (including a rank report for rank-deficient covariates).
  void validate() const;
};

// Fixed covariates + sizes for generation without the synthetic recipe
// (tests and custom frames).
struct PopulationFrame {
  Eigen::MatrixXd covariates;
  Eigen::VectorXd size_measure;
};

// Calibrated true parameters for the default synthetic frame (P = 9, D = 2,
// outcome order: hires, separations).
GeneratingParams default_generating_params();

// Generates a population from the synthetic-frame recipe in `config`.
// Deterministic in (config, params, seed); unit-level work derives a stream
// from (seed, unit), so any worker count yields the identical population.
FinitePopulation generate_population(const ModelConfig& config,
                                     const GeneratingParams& params,
                                     std::uint64_t seed, int n_workers = 1);

// Generates responses on a fixed frame: draws the latent residuals and
// counts but leaves covariates and sizes exactly as supplied.
FinitePopulation generate_population_from_frame(const PopulationFrame& frame,
                                                const GeneratingParams& params,
                                                double mean_cap,
                                                std::uint64_t seed,
                                                int n_workers = 1);

}  // namespace pseudopost
