#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pseudopost/design.hpp"
#include "pseudopost/model.hpp"
#include "pseudopost/population.hpp"

namespace pseudopost {

// The four estimators of the replication study:
//   population-posterior: unweighted fit on the fully observed population
//     (the reference every bias is measured against),
//   pseudo: weight-exponentiated fit on an informative pps sample,
//   unweighted: plain fit on the same informative sample,
//   srs: plain fit on a simple random sample of equal size.
enum class StudyMethod { kPopulationPosterior, kPseudo, kUnweighted, kSrs };

const char* method_name(StudyMethod method);
StudyMethod method_from_name(const std::string& name);

struct StudyConfig {
  // Population source: when population_path is empty, a population is
  // generated from (model, params, population_seed).
  std::string population_path;
  ModelConfig model;
  std::optional<GeneratingParams> params;  // default parameters when absent

  std::vector<int> sample_sizes{500, 1000, 1500, 2500};
  int n_replicates = 100;
  std::vector<StudyMethod> methods{
      StudyMethod::kPopulationPosterior, StudyMethod::kPseudo,
      StudyMethod::kUnweighted, StudyMethod::kSrs};

  int n_iter = 5000;
  int burn_in = 2500;
  int thin = 1;
  double size_power = 0.5;
  std::uint64_t master_seed = 20260825;
  int n_workers = 1;
  double max_failure_fraction = 0.05;

  bool has_method(StudyMethod m) const;
  void validate() const;
};

// Desk-scale preset: both directions of every qualitative check at a few
// minutes of runtime.
StudyConfig desk_study_config();

struct ReplicateRow {
  StudyMethod method;
  int n = 0;          // target sample size (0 for the population posterior)
  int replicate = 0;
  std::string param;
  double mean = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

struct AggregateRow {
  StudyMethod method;
  int n = 0;
  std::string param;
  double pooled_mean = 0.0;  // over draws concatenated across replicates
  double pooled_q025 = 0.0;
  double pooled_q975 = 0.0;
  double bias = 0.0;          // pooled_mean - population-posterior pooled mean
  double avg_ci_width = 0.0;  // mean per-replicate interval width
};

struct FailureRecord {
  StudyMethod method;
  int n = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct StudyResult {
  std::vector<ReplicateRow> replicate_rows;
  std::vector<AggregateRow> aggregate_rows;
  std::vector<FailureRecord> failures;
  int planned_fits = 0;

  const AggregateRow& aggregate(StudyMethod method, int n,
                                const std::string& param) const;
};

// Runs the full design: per (size, replicate) draw one informative pps
// sample and fit it weighted and unweighted, draw an SRS of the same size
// and fit it, and fit the population posterior once on everything.
// Deterministic in the config (work items derive their seeds from
// (master_seed, method, n, replicate)); any failure is recorded and the
// study aborts only if more than max_failure_fraction of fits fail.
StudyResult run_study(const StudyConfig& config, const FinitePopulation& pop);

// Convenience overload that generates or loads the population itself.
StudyResult run_study(const StudyConfig& config);

struct ResponseQuartilesRow {
  std::string scope;  // "population" or "n=<size>"
  int response = 0;   // 1-based response column
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
};

// Quartiles of each response for the population and for each provided
// sample; informative pps samples sit visibly above the population.
std::vector<ResponseQuartilesRow> summarize_distributions(
    const FinitePopulation& pop,
    const std::vector<std::pair<int, ObservedSample>>& samples_by_size);

}  // namespace pseudopost
