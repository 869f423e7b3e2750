#include "pseudopost/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pseudopost/errors.hpp"
#include "pseudopost/rng.hpp"

namespace pseudopost {

namespace {

constexpr std::uint64_t kDesignTag = 0x646573;

void gather_rows(const FinitePopulation& pop, const std::vector<int>& ids,
                 const Eigen::VectorXd& all_pi, ObservedSample* out) {
  const int n = static_cast<int>(ids.size());
  out->unit_ids = ids;
  out->responses.resize(n, pop.responses.cols());
  out->covariates.resize(n, pop.covariates.cols());
  out->size_measure.resize(n);
  out->pi.resize(n);
  for (int k = 0; k < n; ++k) {
    out->responses.row(k) = pop.responses.row(ids[static_cast<std::size_t>(k)]);
    out->covariates.row(k) = pop.covariates.row(ids[static_cast<std::size_t>(k)]);
    out->size_measure[k] = pop.size_measure[ids[static_cast<std::size_t>(k)]];
    out->pi[k] = all_pi[ids[static_cast<std::size_t>(k)]];
  }
  out->raw_weights = out->pi.cwiseInverse();
  out->normalized_weights = normalize_weights(out->raw_weights);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma;
  const Eigen::ArrayXd db = b.array() - mb;
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom == 0.0) return 0.0;
  return (da * db).sum() / denom;
}

}  // namespace

const char* design_kind_name(DesignKind kind) {
  switch (kind) {
    case DesignKind::kPpsFixedSize:
      return "pps";
    case DesignKind::kPoisson:
      return "poisson";
    case DesignKind::kSrs:
      return "srs";
  }
  return "unknown";
}

DesignKind design_kind_from_name(const std::string& name) {
  if (name == "pps") return DesignKind::kPpsFixedSize;
  if (name == "poisson") return DesignKind::kPoisson;
  if (name == "srs") return DesignKind::kSrs;
  throw ConfigError("unknown design kind '" + name +
                    "' (expected pps, poisson, or srs)");
}

void SamplingDesign::validate(int n_units) const {
  if (target_n < 1) {
    throw ConfigError("SamplingDesign: target_n must be >= 1");
  }
  if (target_n > n_units) {
    throw ConfigError("SamplingDesign: target_n = " + std::to_string(target_n) +
                      " exceeds the population size " + std::to_string(n_units));
  }
  if (!(size_power >= 0.0)) {
    throw ConfigError("SamplingDesign: size_power must be >= 0");
  }
}

void ObservedSample::validate() const {
  const int n = size();
  if (n < 1) throw ConfigError("ObservedSample: empty sample");
  if (responses.rows() != n || covariates.rows() != n || pi.size() != n ||
      size_measure.size() != n || raw_weights.size() != n ||
      normalized_weights.size() != n) {
    throw ConfigError("ObservedSample: field row counts disagree");
  }
  for (int k = 0; k < n; ++k) {
    if (!(pi[k] > 0.0) || pi[k] > 1.0) {
      throw ConfigError("ObservedSample: pi outside (0, 1] at row " +
                        std::to_string(k + 1));
    }
    if (!(normalized_weights[k] > 0.0)) {
      throw ConfigError("ObservedSample: non-positive normalized weight at row " +
                        std::to_string(k + 1));
    }
  }
  if (std::abs(normalized_weights.sum() - static_cast<double>(n)) > 1e-8) {
    throw ConfigError(
        "ObservedSample: normalized weights do not sum to the sample size");
  }
}

InclusionProbabilities compute_inclusion_probs(const FinitePopulation& pop,
                                               const SamplingDesign& design) {
  const int n_units = pop.n_units();
  design.validate(n_units);
  const int target = design.target_n;

  InclusionProbabilities out;
  out.pi.resize(n_units);
  out.pairwise_independent = (design.kind == DesignKind::kPoisson);

  if (design.kind == DesignKind::kSrs) {
    out.pi.setConstant(static_cast<double>(target) / n_units);
    out.certainty_count = (target == n_units) ? n_units : 0;
    return out;
  }

  Eigen::VectorXd score(n_units);
  for (int i = 0; i < n_units; ++i) {
    score[i] = std::pow(pop.size_measure[i], design.size_power);
    if (!(score[i] > 0.0) || !std::isfinite(score[i])) {
      throw NumericalError("compute_inclusion_probs: size^power is not a "
                           "positive finite number at unit " +
                           std::to_string(i + 1));
    }
  }

  // Iterative certainty capping: proportional probabilities that exceed 1
  // are pinned there and the remaining budget is re-proportioned over the
  // rest, until no probability exceeds 1.
  std::vector<char> capped(static_cast<std::size_t>(n_units), 0);
  int n_capped = 0;
  for (;;) {
    const double budget = static_cast<double>(target - n_capped);
    double total = 0.0;
    for (int i = 0; i < n_units; ++i) {
      if (!capped[static_cast<std::size_t>(i)]) total += score[i];
    }
    if (n_capped < n_units && !(total > 0.0)) {
      throw NumericalError(
          "compute_inclusion_probs: no remaining size mass to allocate");
    }
    const double scale = budget / total;
    bool changed = false;
    for (int i = 0; i < n_units; ++i) {
      if (capped[static_cast<std::size_t>(i)]) continue;
      if (score[i] * scale > 1.0) {
        capped[static_cast<std::size_t>(i)] = 1;
        ++n_capped;
        changed = true;
      }
    }
    if (!changed) {
      for (int i = 0; i < n_units; ++i) {
        out.pi[i] = capped[static_cast<std::size_t>(i)] ? 1.0 : score[i] * scale;
      }
      break;
    }
  }
  out.certainty_count = n_capped;
  return out;
}

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& raw) {
  const Eigen::Index n = raw.size();
  if (n == 0) return raw;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(raw[i] > 0.0) || !std::isfinite(raw[i])) {
      throw ConfigError("normalize_weights: entry " + std::to_string(i + 1) +
                        " is not a positive finite number");
    }
  }
  // Equal weights normalize to exactly 1.0; take that path verbatim so the
  // uniform case is bit-exact rather than 1 +/- rounding.
  if (raw.minCoeff() == raw.maxCoeff()) {
    return Eigen::VectorXd::Ones(n);
  }
  return raw * (static_cast<double>(n) / raw.sum());
}

ObservedSample census_sample(const FinitePopulation& pop) {
  const int n = pop.n_units();
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  ObservedSample out;
  gather_rows(pop, ids, Eigen::VectorXd::Ones(n), &out);
  return out;
}

ObservedSample draw_sample(const FinitePopulation& pop,
                           const InclusionProbabilities& probs,
                           const SamplingDesign& design, std::uint64_t seed) {
  const int n_units = pop.n_units();
  design.validate(n_units);
  if (probs.pi.size() != n_units) {
    throw ConfigError("draw_sample: probabilities do not match the population");
  }
  RngStream rs(derive_seed(seed, kDesignTag, static_cast<std::uint64_t>(design.kind)));
  std::vector<int> ids;

  switch (design.kind) {
    case DesignKind::kPoisson: {
      for (int i = 0; i < n_units; ++i) {
        if (rs.uniform() < probs.pi[i]) ids.push_back(i);
      }
      break;
    }
    case DesignKind::kSrs: {
      std::vector<int> order(static_cast<std::size_t>(n_units));
      std::iota(order.begin(), order.end(), 0);
      for (int k = 0; k < design.target_n; ++k) {
        const int j = k + static_cast<int>(rs.uniform_index(
                              static_cast<std::uint64_t>(n_units - k)));
        std::swap(order[static_cast<std::size_t>(k)],
                  order[static_cast<std::size_t>(j)]);
      }
      ids.assign(order.begin(), order.begin() + design.target_n);
      std::sort(ids.begin(), ids.end());
      break;
    }
    case DesignKind::kPpsFixedSize: {
      // Systematic selection on a uniformly randomized order: with the
      // probabilities laid end to end, every unit interval of the cumulative
      // axis contains exactly one selection point, so the draw returns
      // exactly n units and honors each marginal pi.
      std::vector<int> order(static_cast<std::size_t>(n_units));
      std::iota(order.begin(), order.end(), 0);
      for (int k = n_units - 1; k > 0; --k) {
        const int j = static_cast<int>(
            rs.uniform_index(static_cast<std::uint64_t>(k + 1)));
        std::swap(order[static_cast<std::size_t>(k)],
                  order[static_cast<std::size_t>(j)]);
      }
      std::vector<double> cum(static_cast<std::size_t>(n_units));
      double acc = 0.0;
      for (int k = 0; k < n_units; ++k) {
        acc += probs.pi[order[static_cast<std::size_t>(k)]];
        cum[static_cast<std::size_t>(k)] = acc;
      }
      const double start = rs.uniform();
      int prev = -1;
      for (int m = 0; m < design.target_n; ++m) {
        const double point = start + static_cast<double>(m);
        auto it = std::upper_bound(cum.begin(), cum.end(), point);
        int idx = static_cast<int>(it - cum.begin());
        if (idx >= n_units) idx = n_units - 1;  // guards rounding at the end
        if (idx <= prev) idx = prev + 1;        // defensively keep units distinct
        if (idx >= n_units) {
          throw NumericalError("draw_sample: systematic selection ran past the "
                               "cumulative range");
        }
        ids.push_back(order[static_cast<std::size_t>(idx)]);
        prev = idx;
      }
      std::sort(ids.begin(), ids.end());
      break;
    }
  }

  ObservedSample out;
  gather_rows(pop, ids, probs.pi, &out);
  return out;
}

DesignDiagnosticsReport design_report(const FinitePopulation& pop,
                                      const InclusionProbabilities& probs,
                                      const SamplingDesign& design,
                                      const std::vector<ObservedSample>& samples) {
  if (samples.empty()) {
    throw ConfigError("design_report: at least one drawn sample is required");
  }
  const int n_units = pop.n_units();
  if (probs.pi.size() != n_units) {
    throw ConfigError("design_report: probabilities do not match the population");
  }

  DesignDiagnosticsReport rep;
  rep.target_n = design.target_n;
  rep.certainty_count = probs.certainty_count;
  rep.min_pi = probs.pi.minCoeff();
  rep.max_pi = probs.pi.maxCoeff();
  const double mean_pi = probs.pi.mean();
  const double var_pi =
      (probs.pi.array() - mean_pi).square().sum() / static_cast<double>(n_units);
  rep.cv_pi = (mean_pi > 0.0) ? std::sqrt(var_pi) / mean_pi : 0.0;

  rep.cor_response_pi.resize(static_cast<std::size_t>(pop.n_outcomes()));
  for (int d = 0; d < pop.n_outcomes(); ++d) {
    rep.cor_response_pi[static_cast<std::size_t>(d)] =
        pearson(pop.responses.col(d).cast<double>(), probs.pi);
  }

  rep.gamma = 1.0 / rep.min_pi;
  rep.sampling_fraction = static_cast<double>(design.target_n) / n_units;

  double total_n = 0.0;
  for (const ObservedSample& s : samples) total_n += s.size();
  rep.mean_realized_n = total_n / static_cast<double>(samples.size());

  if (probs.pairwise_independent) {
    // pi_ij = pi_i * pi_j by construction, so the dependence ratio is
    // identically 1 over all pairs.
    rep.a5_max_ratio = 0.0;
    rep.c3_proxy = static_cast<double>(n_units);
  }
  return rep;
}

}  // namespace pseudopost
