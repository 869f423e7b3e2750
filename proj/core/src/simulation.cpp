#include "pseudopost/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "pseudopost/errors.hpp"
#include "pseudopost/io.hpp"
#include "pseudopost/parallel.hpp"
#include "pseudopost/rng.hpp"
#include "pseudopost/stats.hpp"

namespace pseudopost {

namespace {

constexpr std::uint64_t kPopulationSeedTag = 0x737475;  // population generation
constexpr std::uint64_t kPpsSampleTag = 11;
constexpr std::uint64_t kSrsSampleTag = 12;
constexpr std::uint64_t kFitTag = 21;

std::uint64_t method_tag(StudyMethod m) {
  return static_cast<std::uint64_t>(m) + 1;
}

struct FitOutput {
  StudyMethod method = StudyMethod::kPseudo;
  int n = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Eigen::MatrixXd coeff_draws;
  std::vector<ScalarSummary> coeff_summaries;
};

struct WorkItem {
  enum class Kind { kPpsPair, kSrs, kCensus } kind = Kind::kPpsPair;
  int n = 0;
  int replicate = 0;
};

FitOutput run_one_fit(const ObservedSample& sample, StudyMethod method, int n,
                      int replicate, const StudyConfig& config) {
  FitOutput out;
  out.method = method;
  out.n = n;
  out.replicate = replicate;
  out.seed = derive_seed(config.master_seed, kFitTag, method_tag(method),
                         static_cast<std::uint64_t>(n),
                         static_cast<std::uint64_t>(replicate));
  FitConfig fc;
  fc.n_iter = config.n_iter;
  fc.burn_in = config.burn_in;
  fc.thin = config.thin;
  fc.seed = out.seed;
  fc.weighted = (method == StudyMethod::kPseudo);
  fc.n_workers = 1;  // parallelism lives across work items
  try {
    PosteriorDraws draws = fit(sample, fc);
    out.coeff_draws = std::move(draws.coeff_draws);
    const std::size_t n_coeff =
        static_cast<std::size_t>(draws.n_predictors * draws.n_outcomes);
    out.coeff_summaries.assign(draws.summaries.begin(),
                               draws.summaries.begin() + n_coeff);
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

const char* method_name(StudyMethod method) {
  switch (method) {
    case StudyMethod::kPopulationPosterior:
      return "population-posterior";
    case StudyMethod::kPseudo:
      return "pseudo";
    case StudyMethod::kUnweighted:
      return "unweighted";
    case StudyMethod::kSrs:
      return "srs";
  }
  return "unknown";
}

StudyMethod method_from_name(const std::string& name) {
  if (name == "population-posterior") return StudyMethod::kPopulationPosterior;
  if (name == "pseudo") return StudyMethod::kPseudo;
  if (name == "unweighted") return StudyMethod::kUnweighted;
  if (name == "srs") return StudyMethod::kSrs;
  throw ConfigError("unknown study method '" + name +
                    "' (expected population-posterior, pseudo, unweighted, or "
                    "srs)");
}

bool StudyConfig::has_method(StudyMethod m) const {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

void StudyConfig::validate() const {
  if (methods.empty()) throw ConfigError("StudyConfig: no methods selected");
  if (n_replicates < 1) {
    throw ConfigError("StudyConfig: n_replicates must be >= 1");
  }
  if (sample_sizes.empty() &&
      (has_method(StudyMethod::kPseudo) || has_method(StudyMethod::kUnweighted) ||
       has_method(StudyMethod::kSrs))) {
    throw ConfigError("StudyConfig: sample_sizes is empty");
  }
  for (int n : sample_sizes) {
    if (n < 1) throw ConfigError("StudyConfig: sample sizes must be >= 1");
  }
  FitConfig fc;
  fc.n_iter = n_iter;
  fc.burn_in = burn_in;
  fc.thin = thin;
  fc.n_workers = std::max(1, n_workers);
  fc.validate();
  if (!(size_power >= 0.0)) {
    throw ConfigError("StudyConfig: size_power must be >= 0");
  }
  if (!(max_failure_fraction >= 0.0) || max_failure_fraction >= 1.0) {
    throw ConfigError("StudyConfig: max_failure_fraction must lie in [0, 1)");
  }
}

StudyConfig desk_study_config() {
  StudyConfig config;
  config.sample_sizes = {500, 2500};
  config.n_replicates = 20;
  config.n_iter = 2000;
  config.burn_in = 1000;
  config.thin = 1;
  return config;
}

const AggregateRow& StudyResult::aggregate(StudyMethod method, int n,
                                           const std::string& param) const {
  for (const AggregateRow& row : aggregate_rows) {
    if (row.method == method && row.n == n && row.param == param) return row;
  }
  throw ConfigError(std::string("StudyResult: no aggregate row for ") +
                    method_name(method) + ", n=" + std::to_string(n) +
                    ", param=" + param);
}

StudyResult run_study(const StudyConfig& config, const FinitePopulation& pop) {
  config.validate();
  pop.validate();
  for (int n : config.sample_sizes) {
    if (n > pop.n_units()) {
      throw ConfigError("run_study: sample size " + std::to_string(n) +
                        " exceeds the population size " +
                        std::to_string(pop.n_units()));
    }
  }

  const bool want_pseudo = config.has_method(StudyMethod::kPseudo);
  const bool want_unweighted = config.has_method(StudyMethod::kUnweighted);
  const bool want_srs = config.has_method(StudyMethod::kSrs);
  const bool want_census = config.has_method(StudyMethod::kPopulationPosterior);

  // Inclusion probabilities are a pure function of (population, design);
  // compute them once per sample size.
  std::map<int, InclusionProbabilities> pps_probs;
  if (want_pseudo || want_unweighted) {
    for (int n : config.sample_sizes) {
      SamplingDesign design;
      design.kind = DesignKind::kPpsFixedSize;
      design.target_n = n;
      design.size_power = config.size_power;
      pps_probs.emplace(n, compute_inclusion_probs(pop, design));
    }
  }

  std::vector<WorkItem> items;
  if (want_census) {
    items.push_back({WorkItem::Kind::kCensus, 0, 0});
  }
  for (int n : config.sample_sizes) {
    for (int rep = 0; rep < config.n_replicates; ++rep) {
      if (want_pseudo || want_unweighted) {
        items.push_back({WorkItem::Kind::kPpsPair, n, rep});
      }
      if (want_srs) {
        items.push_back({WorkItem::Kind::kSrs, n, rep});
      }
    }
  }

  StudyResult result;
  result.planned_fits =
      static_cast<int>(config.sample_sizes.size()) * config.n_replicates *
          ((want_pseudo ? 1 : 0) + (want_unweighted ? 1 : 0) +
           (want_srs ? 1 : 0)) +
      (want_census ? 1 : 0);

  std::vector<std::vector<FitOutput>> item_fits(items.size());
  parallel_for(static_cast<std::int64_t>(items.size()), config.n_workers,
               [&](std::int64_t idx) {
    const WorkItem& item = items[static_cast<std::size_t>(idx)];
    std::vector<FitOutput>& fits = item_fits[static_cast<std::size_t>(idx)];
    switch (item.kind) {
      case WorkItem::Kind::kCensus: {
        const ObservedSample census = census_sample(pop);
        fits.push_back(run_one_fit(census, StudyMethod::kPopulationPosterior, 0,
                                   0, config));
        break;
      }
      case WorkItem::Kind::kPpsPair: {
        SamplingDesign design;
        design.kind = DesignKind::kPpsFixedSize;
        design.target_n = item.n;
        design.size_power = config.size_power;
        const ObservedSample sample = draw_sample(
            pop, pps_probs.at(item.n), design,
            derive_seed(config.master_seed, kPpsSampleTag,
                        static_cast<std::uint64_t>(item.n),
                        static_cast<std::uint64_t>(item.replicate)));
        // Both estimators see the same informative sample.
        if (want_pseudo) {
          fits.push_back(run_one_fit(sample, StudyMethod::kPseudo, item.n,
                                     item.replicate, config));
        }
        if (want_unweighted) {
          fits.push_back(run_one_fit(sample, StudyMethod::kUnweighted, item.n,
                                     item.replicate, config));
        }
        break;
      }
      case WorkItem::Kind::kSrs: {
        SamplingDesign design;
        design.kind = DesignKind::kSrs;
        design.target_n = item.n;
        const InclusionProbabilities probs = compute_inclusion_probs(pop, design);
        const ObservedSample sample = draw_sample(
            pop, probs, design,
            derive_seed(config.master_seed, kSrsSampleTag,
                        static_cast<std::uint64_t>(item.n),
                        static_cast<std::uint64_t>(item.replicate)));
        fits.push_back(run_one_fit(sample, StudyMethod::kSrs, item.n,
                                   item.replicate, config));
        break;
      }
    }
  });

  // Sequential pass over items in their fixed order: emit replicate rows,
  // pool draws per (method, n), and collect failures deterministically.
  struct Cell {
    std::vector<const FitOutput*> fits;
  };
  std::map<std::pair<int, int>, Cell> cells;  // (method index, n) -> fits
  for (const auto& fits : item_fits) {
    for (const FitOutput& fo : fits) {
      if (!fo.ok) {
        result.failures.push_back(
            {fo.method, fo.n, fo.replicate, fo.seed, fo.error});
        continue;
      }
      for (const ScalarSummary& s : fo.coeff_summaries) {
        result.replicate_rows.push_back(
            {fo.method, fo.n, fo.replicate, s.name, s.mean, s.q025, s.q975});
      }
      cells[{static_cast<int>(fo.method), fo.n}].fits.push_back(&fo);
    }
  }

  if (static_cast<double>(result.failures.size()) >
      config.max_failure_fraction * static_cast<double>(result.planned_fits)) {
    std::string detail;
    for (const FailureRecord& f : result.failures) {
      detail += std::string("\n  ") + method_name(f.method) +
                " n=" + std::to_string(f.n) +
                " replicate=" + std::to_string(f.replicate) + ": " + f.message;
      if (detail.size() > 2000) break;
    }
    throw NumericalError("run_study: " + std::to_string(result.failures.size()) +
                         " of " + std::to_string(result.planned_fits) +
                         " fits failed (above the abort threshold)" + detail);
  }

  // Reference means: the population posterior pooled over its draws.
  std::map<std::string, double> reference_mean;
  bool have_reference = false;
  {
    auto it = cells.find({static_cast<int>(StudyMethod::kPopulationPosterior), 0});
    if (it != cells.end() && !it->second.fits.empty()) {
      const FitOutput& fo = *it->second.fits.front();
      for (std::size_t c = 0; c < fo.coeff_summaries.size(); ++c) {
        reference_mean[fo.coeff_summaries[c].name] =
            fo.coeff_draws.col(static_cast<Eigen::Index>(c)).mean();
      }
      have_reference = true;
    }
  }

  for (const auto& [key, cell] : cells) {
    if (cell.fits.empty()) continue;
    const StudyMethod method = static_cast<StudyMethod>(key.first);
    const int n = key.second;
    const FitOutput& first = *cell.fits.front();
    const std::size_t n_params = first.coeff_summaries.size();

    for (std::size_t c = 0; c < n_params; ++c) {
      const std::string& param = first.coeff_summaries[c].name;
      std::vector<double> pooled;
      double width_sum = 0.0;
      for (const FitOutput* fo : cell.fits) {
        const auto col = fo->coeff_draws.col(static_cast<Eigen::Index>(c));
        pooled.insert(pooled.end(), col.data(), col.data() + col.size());
        width_sum +=
            fo->coeff_summaries[c].q975 - fo->coeff_summaries[c].q025;
      }
      std::sort(pooled.begin(), pooled.end());
      AggregateRow row;
      row.method = method;
      row.n = n;
      row.param = param;
      double mean = 0.0;
      for (double v : pooled) mean += v;
      row.pooled_mean = mean / static_cast<double>(pooled.size());
      row.pooled_q025 = quantile_sorted(pooled, 0.025);
      row.pooled_q975 = quantile_sorted(pooled, 0.975);
      row.avg_ci_width = width_sum / static_cast<double>(cell.fits.size());
      row.bias = have_reference
                     ? row.pooled_mean - reference_mean.at(param)
                     : std::numeric_limits<double>::quiet_NaN();
      result.aggregate_rows.push_back(std::move(row));
    }
  }
  return result;
}

StudyResult run_study(const StudyConfig& config) {
  config.validate();
  FinitePopulation pop;
  if (!config.population_path.empty()) {
    pop = load_population(config.population_path);
  } else {
    const GeneratingParams params =
        config.params ? *config.params : default_generating_params();
    pop = generate_population(config.model, params,
                              derive_seed(config.master_seed, kPopulationSeedTag),
                              std::max(1, config.n_workers));
  }
  return run_study(config, pop);
}

std::vector<ResponseQuartilesRow> summarize_distributions(
    const FinitePopulation& pop,
    const std::vector<std::pair<int, ObservedSample>>& samples_by_size) {
  std::vector<ResponseQuartilesRow> rows;
  const int d = pop.n_outcomes();

  const auto emit = [&](const std::string& scope, const CountMatrix& counts) {
    for (int k = 0; k < d; ++k) {
      std::vector<double> values(static_cast<std::size_t>(counts.rows()));
      for (Eigen::Index i = 0; i < counts.rows(); ++i) {
        values[static_cast<std::size_t>(i)] = static_cast<double>(counts(i, k));
      }
      std::sort(values.begin(), values.end());
      rows.push_back({scope, k + 1, quantile_sorted(values, 0.25),
                      quantile_sorted(values, 0.50),
                      quantile_sorted(values, 0.75)});
    }
  };

  emit("population", pop.responses);
  for (const auto& [n, sample] : samples_by_size) {
    emit("n=" + std::to_string(n), sample.responses);
  }
  return rows;
}

}  // namespace pseudopost
