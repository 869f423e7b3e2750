#include "pseudopost/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pseudopost/errors.hpp"
#include "pseudopost/linalg.hpp"
#include "pseudopost/parallel.hpp"
#include "pseudopost/rng.hpp"
#include "pseudopost/samplers.hpp"
#include "pseudopost/stats.hpp"

namespace pseudopost {

namespace {

// Seed-path tags: one per conditional update, so every update in every
// iteration owns a distinct random stream regardless of threading.
constexpr std::uint64_t kLogRatesTag = 1;
constexpr std::uint64_t kCoeffsTag = 2;
constexpr std::uint64_t kResidPrecTag = 3;
constexpr std::uint64_t kShrinkTag = 4;
constexpr std::uint64_t kPredPrecTag = 5;

// Proposals with any coordinate above this are treated as log-likelihood
// -inf inside the slice sampler; exp() would otherwise overflow and poison
// the chain with non-finite values.
constexpr double kLogRateGuard = 700.0;

Eigen::VectorXd effective_weights(const ObservedSample& sample, bool weighted) {
  if (weighted) return sample.normalized_weights;
  return Eigen::VectorXd::Ones(sample.size());
}

ScalarSummary summarize_column(const std::string& name,
                               const Eigen::Ref<const Eigen::VectorXd>& column) {
  std::vector<double> sorted(column.data(), column.data() + column.size());
  std::sort(sorted.begin(), sorted.end());
  ScalarSummary s;
  s.name = name;
  s.mean = column.mean();
  s.q025 = quantile_sorted(sorted, 0.025);
  s.q975 = quantile_sorted(sorted, 0.975);
  return s;
}

// Precomputed weighted cross-products reused across iterations (the weights
// never change within a fit).
struct FitWorkspace {
  Eigen::MatrixXd xtw;   // P x n, X' diag(w)
  Eigen::MatrixXd xtwx;  // P x P, X' diag(w) X
  double weight_sum = 0.0;

  FitWorkspace(const ObservedSample& sample, const Eigen::VectorXd& w) {
    xtw = sample.covariates.transpose() * w.asDiagonal();
    xtwx = xtw * sample.covariates;
    weight_sum = w.sum();
  }
};

void update_coeffs_ws(McmcState* state, const FitWorkspace& ws,
                      std::uint64_t seed, std::uint64_t iter) {
  RngStream rs(derive_seed(seed, kCoeffsTag, iter));
  Eigen::MatrixXd phi = ws.xtwx + state->coeff_shrink * state->pred_prec;
  const CholeskyFactor phi_chol = cholesky(phi, "coefficient row precision");
  const Eigen::MatrixXd rhs = ws.xtw * state->log_rates;
  const Eigen::MatrixXd mean = phi_chol.solve(rhs);
  const CholeskyFactor resid_chol = cholesky(state->resid_prec, "resid_prec");
  state->coeffs = sample_matrix_normal(mean, phi_chol, resid_chol, rs);
}

void update_resid_prec_ws(McmcState* state, const ObservedSample& sample,
                          const Eigen::VectorXd& w, double weight_sum,
                          std::uint64_t seed, std::uint64_t iter) {
  RngStream rs(derive_seed(seed, kResidPrecTag, iter));
  const int d = static_cast<int>(state->resid_prec.rows());
  const int p = static_cast<int>(state->coeffs.rows());

  Eigen::MatrixXd resid = state->log_rates - sample.covariates * state->coeffs;
  Eigen::MatrixXd scatter = resid.transpose() * w.asDiagonal() * resid;
  Eigen::MatrixXd prior_term = state->coeff_shrink * state->coeffs.transpose() *
                               state->pred_prec * state->coeffs;
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(d, d) + scatter + prior_term;
  const double df = static_cast<double>(d + 1) + weight_sum + static_cast<double>(p);
  const Eigen::MatrixXd scale = spd_inverse(s, "residual-precision scale");
  state->resid_prec = sample_wishart(df, scale, rs);
}

}  // namespace

void McmcState::validate() const {
  if (!log_rates.allFinite()) {
    throw NumericalError("McmcState: log_rates has non-finite entries");
  }
  if (!(coeff_shrink > 0.0)) {
    throw NumericalError("McmcState: coeff_shrink must be positive");
  }
  if (!is_spd(resid_prec)) {
    throw NumericalError("McmcState: resid_prec is not SPD");
  }
  if (!is_spd(pred_prec)) {
    throw NumericalError("McmcState: pred_prec is not SPD");
  }
}

void FitConfig::validate() const {
  if (n_iter < 1) throw ConfigError("FitConfig: n_iter must be >= 1");
  if (burn_in < 0 || burn_in >= n_iter) {
    throw ConfigError("FitConfig: burn_in must satisfy 0 <= burn_in < n_iter");
  }
  if (thin < 1) throw ConfigError("FitConfig: thin must be >= 1");
  if (n_workers < 1) throw ConfigError("FitConfig: n_workers must be >= 1");
}

std::string coeff_name(int p, int d) {
  return "b_" + std::to_string(p + 1) + "_" + std::to_string(d + 1);
}

std::string resid_prec_name(int i, int j) {
  return "lambda_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
}

Eigen::MatrixXd PosteriorDraws::coeff_mean() const {
  Eigen::MatrixXd mean(n_predictors, n_outcomes);
  for (int d = 0; d < n_outcomes; ++d) {
    for (int p = 0; p < n_predictors; ++p) {
      mean(p, d) = coeff_draws.col(d * n_predictors + p).mean();
    }
  }
  return mean;
}

Eigen::MatrixXd PosteriorDraws::resid_prec_mean() const {
  Eigen::MatrixXd mean(n_outcomes, n_outcomes);
  int col = 0;
  for (int i = 0; i < n_outcomes; ++i, ++col) {
    mean(i, i) = resid_prec_draws.col(col).mean();
  }
  for (int j = 0; j < n_outcomes; ++j) {
    for (int i = j + 1; i < n_outcomes; ++i, ++col) {
      const double v = resid_prec_draws.col(col).mean();
      mean(i, j) = v;
      mean(j, i) = v;
    }
  }
  return mean;
}

const ScalarSummary& PosteriorDraws::summary(const std::string& name) const {
  for (const ScalarSummary& s : summaries) {
    if (s.name == name) return s;
  }
  throw ConfigError("PosteriorDraws: no summary named " + name);
}

McmcState init_state(const ObservedSample& sample, std::uint64_t seed) {
  (void)seed;  // initialization is deterministic; kept for interface stability
  sample.validate();
  const int n = sample.size();
  const int d = sample.n_outcomes();
  const int p = sample.n_predictors();

  McmcState state;
  state.log_rates.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      state.log_rates(i, k) =
          std::log(static_cast<double>(sample.responses(i, k)) + 0.5);
    }
  }

  const Eigen::VectorXd& w = sample.normalized_weights;
  const Eigen::MatrixXd xtw = sample.covariates.transpose() * w.asDiagonal();
  const CholeskyFactor gram = cholesky(xtw * sample.covariates, "initial Gram matrix");
  state.coeffs = gram.solve(xtw * state.log_rates);

  state.resid_prec = Eigen::MatrixXd::Identity(d, d);
  state.pred_prec = Eigen::MatrixXd::Identity(p, p);
  state.coeff_shrink = 1.0;
  return state;
}

void update_log_rates(McmcState* state, const ObservedSample& sample,
                      bool weighted, std::uint64_t seed, std::uint64_t iter,
                      int n_workers) {
  const int n = sample.size();
  const int d = sample.n_outcomes();
  const Eigen::VectorXd w = effective_weights(sample, weighted);
  const CholeskyFactor resid_chol = cholesky(state->resid_prec, "resid_prec");
  // Prior means of all units in one product; rows are read per unit below.
  const Eigen::MatrixXd prior_means = sample.covariates * state->coeffs;

  constexpr double kTwoPi = 6.283185307179586476925286766559;

  parallel_for(n, n_workers, [&](std::int64_t i) {
    RngStream rs(derive_seed(seed, kLogRatesTag, iter, static_cast<std::uint64_t>(i)));
    const double wi = w[i];
    const double wi_sqrt_inv = 1.0 / std::sqrt(wi);

    thread_local Eigen::VectorXd z, nu, centered, proposal;
    z.resize(d);
    nu.resize(d);
    centered.resize(d);
    proposal.resize(d);

    // Weight-tempered Poisson log-likelihood of unit i, up to a constant.
    const auto log_lik = [&](const Eigen::VectorXd& v) -> double {
      double total = 0.0;
      for (int k = 0; k < d; ++k) {
        if (v[k] > kLogRateGuard) {
          return -std::numeric_limits<double>::infinity();
        }
        total += static_cast<double>(sample.responses(i, k)) * v[k] - std::exp(v[k]);
      }
      return wi * total;
    };

    const Eigen::VectorXd current = state->log_rates.row(i).transpose();
    const double current_ll = log_lik(current);
    if (!std::isfinite(current_ll)) {
      throw NumericalError("update_log_rates: non-finite log-likelihood at unit " +
                           std::to_string(i + 1));
    }

    // Elliptical slice transition against the unit's conditional prior
    // N(prior_mean, (w_i * resid_prec)^-1): scaling the precision by w_i
    // scales the prior draw by 1/sqrt(w_i).
    for (int k = 0; k < d; ++k) z[k] = rs.normal();
    nu = resid_chol.solve_transposed(z) * wi_sqrt_inv;
    const double log_threshold = current_ll + std::log(rs.uniform());

    double theta = rs.uniform(0.0, kTwoPi);
    double theta_min = theta - kTwoPi;
    double theta_max = theta;
    centered = current - prior_means.row(i).transpose();

    bool accepted = false;
    for (int step = 0; step < 1000; ++step) {
      proposal = prior_means.row(i).transpose() + std::cos(theta) * centered +
                 std::sin(theta) * nu;
      if (log_lik(proposal) > log_threshold) {
        accepted = true;
        break;
      }
      if (theta < 0.0) {
        theta_min = theta;
      } else {
        theta_max = theta;
      }
      theta = rs.uniform(theta_min, theta_max);
    }
    if (!accepted) {
      throw NumericalError(
          "update_log_rates: slice bracket failed to close at unit " +
          std::to_string(i + 1));
    }
    state->log_rates.row(i) = proposal.transpose();
  });
}

void update_coeffs(McmcState* state, const ObservedSample& sample, bool weighted,
                   std::uint64_t seed, std::uint64_t iter) {
  const FitWorkspace ws(sample, effective_weights(sample, weighted));
  update_coeffs_ws(state, ws, seed, iter);
}

void update_resid_prec(McmcState* state, const ObservedSample& sample,
                       bool weighted, std::uint64_t seed, std::uint64_t iter) {
  const Eigen::VectorXd w = effective_weights(sample, weighted);
  update_resid_prec_ws(state, sample, w, w.sum(), seed, iter);
}

void update_coeff_shrink(McmcState* state, std::uint64_t seed,
                         std::uint64_t iter) {
  RngStream rs(derive_seed(seed, kShrinkTag, iter));
  const double pd =
      static_cast<double>(state->coeffs.rows() * state->coeffs.cols());
  const Eigen::MatrixXd quad =
      state->coeffs.transpose() * state->pred_prec * state->coeffs;
  const double rate = 1.0 + 0.5 * (state->resid_prec * quad).trace();
  const double shape = 1.0 + 0.5 * pd;
  state->coeff_shrink = rs.gamma(shape, 1.0 / rate);
}

void update_pred_prec(McmcState* state, std::uint64_t seed, std::uint64_t iter) {
  RngStream rs(derive_seed(seed, kPredPrecTag, iter));
  const int p = static_cast<int>(state->coeffs.rows());
  const int d = static_cast<int>(state->coeffs.cols());
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(p, p) +
                      state->coeff_shrink * state->coeffs * state->resid_prec *
                          state->coeffs.transpose();
  const double df = static_cast<double>(p + 1 + d);
  const Eigen::MatrixXd scale = spd_inverse(s, "predictor-precision scale");
  state->pred_prec = sample_wishart(df, scale, rs);
}

PosteriorDraws fit(const ObservedSample& sample, const FitConfig& config) {
  config.validate();
  sample.validate();
  const int n_param_rows = sample.n_predictors();
  const int d = sample.n_outcomes();
  const int retained = config.retained();
  if (retained < 1) {
    throw ConfigError("fit: no draws would be retained; lower burn_in or thin");
  }

  McmcState state = init_state(sample, config.seed);
  const Eigen::VectorXd w = effective_weights(sample, config.weighted);
  const FitWorkspace ws(sample, w);

  PosteriorDraws out;
  out.n_predictors = n_param_rows;
  out.n_outcomes = d;
  const int n_prec_cols = d + d * (d - 1) / 2;
  out.coeff_draws.resize(retained, n_param_rows * d);
  out.resid_prec_draws.resize(retained, n_prec_cols);
  out.shrink_draws.resize(retained);

  int row = 0;
  for (int iter = 0; iter < config.n_iter; ++iter) {
    try {
      update_log_rates(&state, sample, config.weighted, config.seed,
                       static_cast<std::uint64_t>(iter), config.n_workers);
      update_coeffs_ws(&state, ws, config.seed, static_cast<std::uint64_t>(iter));
      update_resid_prec_ws(&state, sample, w, ws.weight_sum, config.seed,
                           static_cast<std::uint64_t>(iter));
      update_coeff_shrink(&state, config.seed, static_cast<std::uint64_t>(iter));
      update_pred_prec(&state, config.seed, static_cast<std::uint64_t>(iter));
    } catch (const ConfigError& e) {
      throw ConfigError("fit: iteration " + std::to_string(iter) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("fit: iteration " + std::to_string(iter) + ": " +
                           e.what());
    }

    if (iter >= config.burn_in && (iter - config.burn_in) % config.thin == 0) {
      for (int dd = 0; dd < d; ++dd) {
        for (int p = 0; p < n_param_rows; ++p) {
          out.coeff_draws(row, dd * n_param_rows + p) = state.coeffs(p, dd);
        }
      }
      int col = 0;
      for (int i = 0; i < d; ++i, ++col) {
        out.resid_prec_draws(row, col) = state.resid_prec(i, i);
      }
      for (int j = 0; j < d; ++j) {
        for (int i = j + 1; i < d; ++i, ++col) {
          out.resid_prec_draws(row, col) = state.resid_prec(i, j);
        }
      }
      out.shrink_draws[row] = state.coeff_shrink;
      ++row;
    }
  }

  out.summaries.reserve(static_cast<std::size_t>(out.coeff_draws.cols()) +
                        static_cast<std::size_t>(n_prec_cols) + 1);
  for (int dd = 0; dd < d; ++dd) {
    for (int p = 0; p < n_param_rows; ++p) {
      out.summaries.push_back(summarize_column(
          coeff_name(p, dd), out.coeff_draws.col(dd * n_param_rows + p)));
    }
  }
  {
    int col = 0;
    for (int i = 0; i < d; ++i, ++col) {
      out.summaries.push_back(
          summarize_column(resid_prec_name(i, i), out.resid_prec_draws.col(col)));
    }
    for (int j = 0; j < d; ++j) {
      for (int i = j + 1; i < d; ++i, ++col) {
        out.summaries.push_back(summarize_column(resid_prec_name(i, j),
                                                 out.resid_prec_draws.col(col)));
      }
    }
  }
  out.summaries.push_back(summarize_column("tau", out.shrink_draws));
  return out;
}

}  // namespace pseudopost
