#include "pseudopost/population.hpp"

#include <cmath>
#include <string>

#include <doctest/doctest.h>

#include "pseudopost/errors.hpp"
#include "pseudopost/linalg.hpp"
#include "support.hpp"

using namespace pseudopost;

namespace {

ModelConfig small_config(int n = 400) {
  ModelConfig config;
  config.n_units = n;
  return config;
}

}  // namespace

TEST_CASE("generate_population produces a valid frame of the right shape") {
  const ModelConfig config = small_config();
  const FinitePopulation pop =
      generate_population(config, default_generating_params(), 7);
  CHECK(pop.n_units() == 400);
  CHECK(pop.n_outcomes() == 2);
  CHECK(pop.n_predictors() == kRecipePredictors);
  CHECK(pop.true_params.has_value());
  CHECK_NOTHROW(pop.validate());
  CHECK(pop.responses.minCoeff() >= 0);
  CHECK(pop.size_measure.minCoeff() > 0.0);
  // Intercept column is all ones; dummy columns are 0/1.
  for (int i = 0; i < pop.n_units(); ++i) {
    CHECK(pop.covariates(i, kInterceptColumn) == 1.0);
    for (int j = kRegionColumns; j < kEmploymentColumn; ++j) {
      const double v = pop.covariates(i, j);
      CHECK((v == 0.0 || v == 1.0));
    }
  }
}

TEST_CASE("generation is bit-identical across repeats and worker counts") {
  const ModelConfig config = small_config();
  const GeneratingParams params = default_generating_params();
  const FinitePopulation a = generate_population(config, params, 99, 1);
  const FinitePopulation b = generate_population(config, params, 99, 1);
  const FinitePopulation c = generate_population(config, params, 99, 3);
  CHECK(a.responses == b.responses);
  CHECK(a.covariates == b.covariates);
  CHECK(a.size_measure == b.size_measure);
  CHECK(a.responses == c.responses);
  CHECK(a.covariates == c.covariates);
  CHECK(a.size_measure == c.size_measure);
  const FinitePopulation d = generate_population(config, params, 100);
  CHECK(a.responses != d.responses);
}

TEST_CASE("log-employment column respects the winsorization bound") {
  ModelConfig config = small_config(5000);
  const FinitePopulation pop =
      generate_population(config, default_generating_params(), 3);
  const double half_width =
      config.recipe.log_size_clamp * config.recipe.log_size_scale;
  const double lo = config.recipe.log_size_location - half_width;
  const double hi = config.recipe.log_size_location + half_width;
  for (int i = 0; i < pop.n_units(); ++i) {
    CHECK(pop.covariates(i, kEmploymentColumn) >= lo - 1e-12);
    CHECK(pop.covariates(i, kEmploymentColumn) <= hi + 1e-12);
  }
}

TEST_CASE("generate_population_from_frame matches the count model in the mean") {
  // One predictor, fixed coefficient: E[y] = exp(b x + v/2) with v the
  // residual variance (lognormal mixing) — a closed-form oracle.
  const int n = 200000;
  PopulationFrame frame = testsupport::make_frame(n, 5);
  GeneratingParams params;
  params.coeffs = Eigen::MatrixXd(2, 1);
  params.coeffs << 0.4, 0.3;
  params.resid_prec = Eigen::MatrixXd(1, 1);
  params.resid_prec << 4.0;  // residual variance 0.25
  params.pred_prec = Eigen::MatrixXd::Identity(2, 2);
  params.coeff_shrink = 1.0;

  const FinitePopulation pop =
      generate_population_from_frame(frame, params, 1e9, 13);
  CHECK(pop.covariates == frame.covariates);
  CHECK(pop.size_measure == frame.size_measure);

  double mean_ratio_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double linear = 0.4 + 0.3 * frame.covariates(i, 1);
    mean_ratio_sum += double(pop.responses(i, 0)) / std::exp(linear);
  }
  // E[y / exp(b'x)] = E[exp(eps)] = exp(v/2) = exp(0.125).
  CHECK(mean_ratio_sum / n == doctest::Approx(std::exp(0.125)).epsilon(0.02));
}

TEST_CASE("mean_cap violations are reported with unit and response") {
  PopulationFrame frame = testsupport::make_frame(50, 2);
  GeneratingParams params;
  params.coeffs = Eigen::MatrixXd(2, 1);
  params.coeffs << 30.0, 0.0;  // exp(30) blows through any reasonable cap
  params.resid_prec = Eigen::MatrixXd::Identity(1, 1);
  params.pred_prec = Eigen::MatrixXd::Identity(2, 2);
  try {
    generate_population_from_frame(frame, params, 1e6, 11);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("unit") != std::string::npos);
    CHECK(msg.find("response") != std::string::npos);
  }
}

TEST_CASE("GeneratingParams::validate flags structural problems") {
  GeneratingParams params = default_generating_params();
  CHECK_NOTHROW(params.validate());

  SUBCASE("non-SPD residual precision") {
    params.resid_prec(0, 1) = 10.0;
    params.resid_prec(1, 0) = 10.0;
    CHECK_THROWS_AS(params.validate(), ConfigError);
  }
  SUBCASE("non-positive shrink") {
    params.coeff_shrink = 0.0;
    CHECK_THROWS_AS(params.validate(), ConfigError);
  }
  SUBCASE("dimension mismatch between coeffs and pred_prec") {
    params.pred_prec = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(params.validate(), ConfigError);
  }
}

TEST_CASE("ModelConfig::validate flags bad settings") {
  ModelConfig config;
  CHECK_NOTHROW(config.validate());

  SUBCASE("zero units") {
    config.n_units = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
  SUBCASE("bad category probabilities") {
    config.recipe.region_probs = {0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
  SUBCASE("negative category probability") {
    config.recipe.ownership_probs = {-0.1, 0.4, 0.3, 0.4};
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
  SUBCASE("non-positive winsorization width") {
    config.recipe.log_size_clamp = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
  SUBCASE("noise floor outside (0, 1]") {
    config.recipe.size_noise_floor = 1.5;
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
  SUBCASE("mean cap must be positive") {
    config.mean_cap = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
}

TEST_CASE("FinitePopulation::validate reports rank deficiency") {
  FinitePopulation pop =
      generate_population(small_config(60), default_generating_params(), 21);
  // Duplicate a column to break full column rank.
  pop.covariates.col(kOpeningsColumn) = pop.covariates.col(kEmploymentColumn);
  try {
    pop.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("rank") != std::string::npos);
  }
}

TEST_CASE("FinitePopulation::validate flags negative counts and sizes") {
  FinitePopulation pop =
      generate_population(small_config(40), default_generating_params(), 23);
  SUBCASE("negative count") {
    pop.responses(3, 1) = -1;
    CHECK_THROWS_AS(pop.validate(), ConfigError);
  }
  SUBCASE("non-positive size") {
    pop.size_measure[5] = 0.0;
    CHECK_THROWS_AS(pop.validate(), ConfigError);
  }
  SUBCASE("row count mismatch") {
    pop.size_measure.conservativeResize(10);
    CHECK_THROWS_AS(pop.validate(), ConfigError);
  }
}

TEST_CASE("default generating parameters are internally consistent") {
  const GeneratingParams params = default_generating_params();
  CHECK(params.coeffs.rows() == kRecipePredictors);
  CHECK(params.coeffs.cols() == 2);
  CHECK(is_spd(params.resid_prec));
  CHECK(is_spd(params.pred_prec));
  CHECK(params.coeff_shrink > 0.0);
}
