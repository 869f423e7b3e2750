#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pseudopost/population.hpp"

namespace pseudopost {

enum class DesignKind {
  kPpsFixedSize,  // exactly n units, pi proportional to size^power, capped
  kPoisson,       // independent Bernoulli(pi) inclusions, random size
  kSrs,           // simple random sample without replacement, pi = n/N
};

const char* design_kind_name(DesignKind kind);       // "pps", "poisson", "srs"
DesignKind design_kind_from_name(const std::string& name);

struct SamplingDesign {
  DesignKind kind = DesignKind::kPpsFixedSize;
  int target_n = 0;
  double size_power = 0.5;  // exponent applied to size_measure for pps kinds

  void validate(int n_units) const;
};

struct InclusionProbabilities {
  Eigen::VectorXd pi;       // length N, every entry in (0, 1]
  int certainty_count = 0;  // units capped at pi = 1
  // Pairwise probabilities are representable only when inclusions are
  // independent (poisson kind), where pi_ij = pi_i * pi_j by construction.
  bool pairwise_independent = false;
};

struct ObservedSample {
  std::vector<int> unit_ids;          // 0-based population indices, ascending
  CountMatrix responses;              // n x D rows for the sampled units
  Eigen::MatrixXd covariates;         // n x P
  Eigen::VectorXd size_measure;       // n pps sizes of the sampled units
  Eigen::VectorXd pi;                 // inclusion probability of each unit
  Eigen::VectorXd raw_weights;        // 1 / pi
  Eigen::VectorXd normalized_weights; // scaled to sum to the realized n

  int size() const { return static_cast<int>(unit_ids.size()); }
  int n_outcomes() const { return static_cast<int>(responses.cols()); }
  int n_predictors() const { return static_cast<int>(covariates.cols()); }

  void validate() const;
};

// Design-level diagnostics: the published design-characteristics table plus
// the computable contraction conditions (positive inclusion probabilities,
// pairwise independence, stable sampling fraction).
struct DesignDiagnosticsReport {
  int target_n = 0;
  double mean_realized_n = 0.0;
  int certainty_count = 0;
  double min_pi = 0.0;
  double max_pi = 0.0;
  double cv_pi = 0.0;                    // sd(pi) / mean(pi) over the frame
  std::vector<double> cor_response_pi;   // per response column, over the frame
  double gamma = 0.0;                    // 1 / min_pi
  double sampling_fraction = 0.0;        // target_n / N
  // Present only when pairwise probabilities exist (poisson kind):
  std::optional<double> a5_max_ratio;    // max |pi_ij / (pi_i pi_j) - 1|
  std::optional<double> c3_proxy;        // max N * pi_ij / (pi_i pi_j)
};

// Computes marginal inclusion probabilities.  pps kinds scale size^power to
// sum to n and cap iteratively: any pi > 1 becomes a certainty unit and the
// remaining budget is re-proportioned over the rest until a fixed point.
InclusionProbabilities compute_inclusion_probs(const FinitePopulation& pop,
                                               const SamplingDesign& design);

// Draws one sample.  pps-fixed-size uses systematic selection on a uniformly
// randomized unit order (honors the marginal pi exactly and returns exactly
// n units); poisson flips independent Bernoulli(pi); srs draws n units
// uniformly without replacement.  Weights are attached already normalized.
ObservedSample draw_sample(const FinitePopulation& pop,
                           const InclusionProbabilities& probs,
                           const SamplingDesign& design, std::uint64_t seed);

// w~_i = n * w_i / sum_j w_j, so the normalized weights sum to the number of
// entries.  Equal raw weights map to exactly 1.0.
Eigen::VectorXd normalize_weights(const Eigen::VectorXd& raw);

// Builds a census sample (every unit, pi = 1).  Used for the reference fit
// on the fully observed population.
ObservedSample census_sample(const FinitePopulation& pop);

DesignDiagnosticsReport design_report(const FinitePopulation& pop,
                                      const InclusionProbabilities& probs,
                                      const SamplingDesign& design,
                                      const std::vector<ObservedSample>& samples);

}  // namespace pseudopost
