#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pseudopost/design.hpp"
#include "pseudopost/diagnostics.hpp"
#include "pseudopost/model.hpp"
#include "pseudopost/population.hpp"
#include "pseudopost/simulation.hpp"

namespace pseudopost {

// Population CSV schema: unit_id, y_1..y_D, x_1..x_P, size.  A JSON sidecar
// (same path with a .json extension) stores the generating parameters and
// the seed, so save -> load round-trips true_params.
std::string sidecar_path_for(const std::string& csv_path);
void save_population(const FinitePopulation& pop, const std::string& csv_path,
                     std::optional<std::uint64_t> seed = std::nullopt);
FinitePopulation load_population(const std::string& csv_path);

// Sample CSV schema: the population columns plus pi, w_raw, w_norm.
void save_sample(const ObservedSample& sample, const std::string& csv_path);
ObservedSample load_sample(const std::string& csv_path);

// Retained draws, one row per iteration: b_<p>_<d> columns, residual
// precision diagonal then lower triangle, and tau.
void save_draws(const PosteriorDraws& draws, const std::string& csv_path);

// Summary JSON: per-parameter mean and 95% interval, the coefficient and
// residual-precision posterior means, and the fit configuration echo.
void save_fit_summary(const PosteriorDraws& draws, const FitConfig& config,
                      int sample_size, const std::string& json_path);

// Subset of a fit-summary file needed to place the fit on a contraction
// curve.
struct FitSummaryFile {
  int sample_size = 0;
  bool weighted = true;
  int n_predictors = 0;
  int n_outcomes = 0;
  Eigen::MatrixXd coeff_mean;
  Eigen::MatrixXd resid_prec_mean;
  std::vector<ScalarSummary> parameters;
};
FitSummaryFile load_fit_summary(const std::string& json_path);

void save_design_report(const DesignDiagnosticsReport& report,
                        const SamplingDesign& design,
                        const std::string& json_path);

// Study outputs: tidy per-replicate CSV, aggregate JSON, and the response
// quartile table.
void save_study_replicates(const StudyResult& result,
                           const std::string& csv_path);
void save_study_aggregate(const StudyResult& result, const StudyConfig& config,
                          const std::string& json_path);
void save_response_quartiles(const std::vector<ResponseQuartilesRow>& rows,
                             const std::string& csv_path);

// Contraction table CSV: n, method, hellinger_sq, bias_emp_hires,
// bias_emp_seps, ci_width.
void save_contraction(const std::vector<ContractionRow>& rows,
                      const std::string& csv_path);

}  // namespace pseudopost
