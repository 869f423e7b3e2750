#include "pseudopost/io.hpp"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pseudopost/csv.hpp"
#include "pseudopost/errors.hpp"

namespace pseudopost {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw IoError(what + " is not a 2-D numeric array");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw IoError(what + " has ragged rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return m;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failure on '" + path + "'");
}

std::vector<std::string> population_header(int d, int p) {
  std::vector<std::string> header;
  header.push_back("unit_id");
  for (int k = 0; k < d; ++k) header.push_back("y_" + std::to_string(k + 1));
  for (int k = 0; k < p; ++k) header.push_back("x_" + std::to_string(k + 1));
  header.push_back("size");
  return header;
}

// Counts y_1..y_D / x_1..x_P runs in a header; requires contiguous 1-based
// numbering.
int count_numbered(const CsvTable& table, const std::string& prefix,
                   const std::string& path) {
  int count = 0;
  while (true) {
    const std::string name = prefix + std::to_string(count + 1);
    bool found = false;
    for (const std::string& h : table.header) {
      if (h == name) {
        found = true;
        break;
      }
    }
    if (!found) break;
    ++count;
  }
  if (count == 0) {
    throw IoError("'" + path + "' has no '" + prefix + "1' column");
  }
  return count;
}

}  // namespace

std::string sidecar_path_for(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) ==
          0) {
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".json";
  }
  return csv_path + ".json";
}

void save_population(const FinitePopulation& pop, const std::string& csv_path,
                     std::optional<std::uint64_t> seed) {
  pop.validate();
  const int n = pop.n_units();
  const int d = pop.n_outcomes();
  const int p = pop.n_predictors();

  CsvWriter writer(csv_path);
  writer.write_row(population_header(d, p));
  std::vector<std::string> cells;
  for (int i = 0; i < n; ++i) {
    cells.clear();
    cells.push_back(std::to_string(i + 1));
    for (int k = 0; k < d; ++k) cells.push_back(std::to_string(pop.responses(i, k)));
    for (int k = 0; k < p; ++k) cells.push_back(format_double(pop.covariates(i, k)));
    cells.push_back(format_double(pop.size_measure[i]));
    writer.write_row(cells);
  }
  writer.close();

  json sidecar;
  sidecar["n_units"] = n;
  sidecar["n_outcomes"] = d;
  sidecar["n_predictors"] = p;
  if (seed) {
    sidecar["seed"] = *seed;
  } else {
    sidecar["seed"] = nullptr;
  }
  if (pop.true_params) {
    const GeneratingParams& gp = *pop.true_params;
    sidecar["generating_params"] = {
        {"coeffs", matrix_to_json(gp.coeffs)},
        {"resid_prec", matrix_to_json(gp.resid_prec)},
        {"coeff_shrink", gp.coeff_shrink},
        {"pred_prec", matrix_to_json(gp.pred_prec)},
    };
  } else {
    sidecar["generating_params"] = nullptr;
  }
  write_json_file(sidecar, sidecar_path_for(csv_path));
}

FinitePopulation load_population(const std::string& csv_path) {
  const CsvTable table = read_csv(csv_path);
  const int d = count_numbered(table, "y_", csv_path);
  const int p = count_numbered(table, "x_", csv_path);
  const std::size_t n = table.rows.size();
  if (n == 0) throw IoError("'" + csv_path + "' has no data rows");

  std::vector<std::size_t> y_cols(static_cast<std::size_t>(d));
  std::vector<std::size_t> x_cols(static_cast<std::size_t>(p));
  for (int k = 0; k < d; ++k) {
    y_cols[static_cast<std::size_t>(k)] = table.column("y_" + std::to_string(k + 1));
  }
  for (int k = 0; k < p; ++k) {
    x_cols[static_cast<std::size_t>(k)] = table.column("x_" + std::to_string(k + 1));
  }
  const std::size_t size_col = table.column("size");

  FinitePopulation pop;
  pop.responses.resize(static_cast<Eigen::Index>(n), d);
  pop.covariates.resize(static_cast<Eigen::Index>(n), p);
  pop.size_measure.resize(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (int k = 0; k < d; ++k) {
      pop.responses(static_cast<Eigen::Index>(r), k) =
          parse_int_cell(table, r, y_cols[static_cast<std::size_t>(k)], csv_path);
    }
    for (int k = 0; k < p; ++k) {
      pop.covariates(static_cast<Eigen::Index>(r), k) = parse_double_cell(
          table, r, x_cols[static_cast<std::size_t>(k)], csv_path);
    }
    pop.size_measure[static_cast<Eigen::Index>(r)] =
        parse_double_cell(table, r, size_col, csv_path);
  }

  const std::string sidecar = sidecar_path_for(csv_path);
  if (std::filesystem::exists(sidecar)) {
    const json j = load_json_file(sidecar);
    if (j.contains("generating_params") && !j["generating_params"].is_null()) {
      const json& gp = j["generating_params"];
      GeneratingParams params;
      params.coeffs = matrix_from_json(gp.at("coeffs"), sidecar + ": coeffs");
      params.resid_prec =
          matrix_from_json(gp.at("resid_prec"), sidecar + ": resid_prec");
      params.coeff_shrink = gp.at("coeff_shrink").get<double>();
      params.pred_prec =
          matrix_from_json(gp.at("pred_prec"), sidecar + ": pred_prec");
      pop.true_params = std::move(params);
    }
  }

  pop.validate();
  return pop;
}

void save_sample(const ObservedSample& sample, const std::string& csv_path) {
  sample.validate();
  const int n = sample.size();
  const int d = sample.n_outcomes();
  const int p = sample.n_predictors();

  CsvWriter writer(csv_path);
  std::vector<std::string> header = population_header(d, p);
  header.push_back("pi");
  header.push_back("w_raw");
  header.push_back("w_norm");
  writer.write_row(header);

  std::vector<std::string> cells;
  for (int i = 0; i < n; ++i) {
    cells.clear();
    cells.push_back(std::to_string(sample.unit_ids[static_cast<std::size_t>(i)] + 1));
    for (int k = 0; k < d; ++k) cells.push_back(std::to_string(sample.responses(i, k)));
    for (int k = 0; k < p; ++k) cells.push_back(format_double(sample.covariates(i, k)));
    cells.push_back(format_double(sample.size_measure[i]));
    cells.push_back(format_double(sample.pi[i]));
    cells.push_back(format_double(sample.raw_weights[i]));
    cells.push_back(format_double(sample.normalized_weights[i]));
    writer.write_row(cells);
  }
  writer.close();
}

ObservedSample load_sample(const std::string& csv_path) {
  const CsvTable table = read_csv(csv_path);
  const int d = count_numbered(table, "y_", csv_path);
  const int p = count_numbered(table, "x_", csv_path);
  const std::size_t n = table.rows.size();
  if (n == 0) throw IoError("'" + csv_path + "' has no data rows");

  const std::size_t id_col = table.column("unit_id");
  const std::size_t size_col = table.column("size");
  const std::size_t pi_col = table.column("pi");
  const std::size_t raw_col = table.column("w_raw");
  const std::size_t norm_col = table.column("w_norm");

  ObservedSample sample;
  sample.unit_ids.resize(n);
  sample.responses.resize(static_cast<Eigen::Index>(n), d);
  sample.covariates.resize(static_cast<Eigen::Index>(n), p);
  sample.size_measure.resize(static_cast<Eigen::Index>(n));
  sample.pi.resize(static_cast<Eigen::Index>(n));
  sample.raw_weights.resize(static_cast<Eigen::Index>(n));
  sample.normalized_weights.resize(static_cast<Eigen::Index>(n));

  for (std::size_t r = 0; r < n; ++r) {
    sample.unit_ids[r] =
        static_cast<int>(parse_int_cell(table, r, id_col, csv_path)) - 1;
    for (int k = 0; k < d; ++k) {
      sample.responses(static_cast<Eigen::Index>(r), k) = parse_int_cell(
          table, r, table.column("y_" + std::to_string(k + 1)), csv_path);
    }
    for (int k = 0; k < p; ++k) {
      sample.covariates(static_cast<Eigen::Index>(r), k) = parse_double_cell(
          table, r, table.column("x_" + std::to_string(k + 1)), csv_path);
    }
    sample.size_measure[static_cast<Eigen::Index>(r)] =
        parse_double_cell(table, r, size_col, csv_path);
    sample.pi[static_cast<Eigen::Index>(r)] =
        parse_double_cell(table, r, pi_col, csv_path);
    sample.raw_weights[static_cast<Eigen::Index>(r)] =
        parse_double_cell(table, r, raw_col, csv_path);
    sample.normalized_weights[static_cast<Eigen::Index>(r)] =
        parse_double_cell(table, r, norm_col, csv_path);
  }
  sample.validate();
  return sample;
}

void save_draws(const PosteriorDraws& draws, const std::string& csv_path) {
  CsvWriter writer(csv_path);
  std::vector<std::string> header;
  for (int dd = 0; dd < draws.n_outcomes; ++dd) {
    for (int p = 0; p < draws.n_predictors; ++p) header.push_back(coeff_name(p, dd));
  }
  for (int i = 0; i < draws.n_outcomes; ++i) header.push_back(resid_prec_name(i, i));
  for (int j = 0; j < draws.n_outcomes; ++j) {
    for (int i = j + 1; i < draws.n_outcomes; ++i) {
      header.push_back(resid_prec_name(i, j));
    }
  }
  header.push_back("tau");
  writer.write_row(header);

  std::vector<std::string> cells;
  for (int r = 0; r < draws.n_retained(); ++r) {
    cells.clear();
    for (Eigen::Index c = 0; c < draws.coeff_draws.cols(); ++c) {
      cells.push_back(format_double(draws.coeff_draws(r, c)));
    }
    for (Eigen::Index c = 0; c < draws.resid_prec_draws.cols(); ++c) {
      cells.push_back(format_double(draws.resid_prec_draws(r, c)));
    }
    cells.push_back(format_double(draws.shrink_draws[r]));
    writer.write_row(cells);
  }
  writer.close();
}

void save_fit_summary(const PosteriorDraws& draws, const FitConfig& config,
                      int sample_size, const std::string& json_path) {
  json j;
  j["sample_size"] = sample_size;
  j["weighted"] = config.weighted;
  // The worker count is an execution detail, not part of the statistical
  // configuration: output files must be byte-identical at any worker count.
  j["config"] = {{"n_iter", config.n_iter},
                 {"burn_in", config.burn_in},
                 {"thin", config.thin},
                 {"seed", config.seed}};
  j["n_predictors"] = draws.n_predictors;
  j["n_outcomes"] = draws.n_outcomes;
  json params = json::array();
  for (const ScalarSummary& s : draws.summaries) {
    params.push_back({{"name", s.name},
                      {"mean", s.mean},
                      {"q025", s.q025},
                      {"q975", s.q975}});
  }
  j["parameters"] = std::move(params);
  j["coeff_mean"] = matrix_to_json(draws.coeff_mean());
  j["resid_prec_mean"] = matrix_to_json(draws.resid_prec_mean());
  write_json_file(j, json_path);
}

FitSummaryFile load_fit_summary(const std::string& json_path) {
  const json j = load_json_file(json_path);
  FitSummaryFile out;
  try {
    out.sample_size = j.at("sample_size").get<int>();
    out.weighted = j.at("weighted").get<bool>();
    out.n_predictors = j.at("n_predictors").get<int>();
    out.n_outcomes = j.at("n_outcomes").get<int>();
    out.coeff_mean = matrix_from_json(j.at("coeff_mean"), json_path + ": coeff_mean");
    out.resid_prec_mean =
        matrix_from_json(j.at("resid_prec_mean"), json_path + ": resid_prec_mean");
    for (const json& p : j.at("parameters")) {
      ScalarSummary s;
      s.name = p.at("name").get<std::string>();
      s.mean = p.at("mean").get<double>();
      s.q025 = p.at("q025").get<double>();
      s.q975 = p.at("q975").get<double>();
      out.parameters.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw IoError("'" + json_path + "': " + e.what());
  }
  return out;
}

void save_design_report(const DesignDiagnosticsReport& report,
                        const SamplingDesign& design,
                        const std::string& json_path) {
  json j;
  j["design"] = {{"kind", design_kind_name(design.kind)},
                 {"target_n", design.target_n},
                 {"size_power", design.size_power}};
  j["target_n"] = report.target_n;
  j["mean_realized_n"] = report.mean_realized_n;
  j["certainty_count"] = report.certainty_count;
  j["min_pi"] = report.min_pi;
  j["max_pi"] = report.max_pi;
  j["cv_pi"] = report.cv_pi;
  j["cor_response_pi"] = report.cor_response_pi;
  j["gamma"] = report.gamma;
  j["sampling_fraction"] = report.sampling_fraction;
  if (report.a5_max_ratio) {
    j["a5_max_ratio"] = *report.a5_max_ratio;
    j["c3_proxy"] = *report.c3_proxy;
  } else {
    // Pairwise probabilities are not tractable for the systematic fixed-size
    // scheme, so the independence diagnostic is reported as not computed.
    j["a5_max_ratio"] = nullptr;
    j["c3_proxy"] = nullptr;
  }
  write_json_file(j, json_path);
}

void save_study_replicates(const StudyResult& result,
                           const std::string& csv_path) {
  CsvWriter writer(csv_path);
  writer.write_row({"method", "n", "replicate", "param", "mean", "q025", "q975"});
  for (const ReplicateRow& row : result.replicate_rows) {
    writer.write_row({method_name(row.method), std::to_string(row.n),
                      std::to_string(row.replicate), row.param,
                      format_double(row.mean), format_double(row.q025),
                      format_double(row.q975)});
  }
  writer.close();
}

void save_study_aggregate(const StudyResult& result, const StudyConfig& config,
                          const std::string& json_path) {
  json j;
  json methods = json::array();
  for (StudyMethod m : config.methods) methods.push_back(method_name(m));
  j["config"] = {{"sample_sizes", config.sample_sizes},
                 {"n_replicates", config.n_replicates},
                 {"methods", std::move(methods)},
                 {"n_iter", config.n_iter},
                 {"burn_in", config.burn_in},
                 {"thin", config.thin},
                 {"size_power", config.size_power},
                 {"master_seed", config.master_seed}};
  json aggregates = json::array();
  for (const AggregateRow& row : result.aggregate_rows) {
    json entry = {{"method", method_name(row.method)},
                  {"n", row.n},
                  {"param", row.param},
                  {"pooled_mean", row.pooled_mean},
                  {"pooled_q025", row.pooled_q025},
                  {"pooled_q975", row.pooled_q975},
                  {"avg_ci_width", row.avg_ci_width}};
    if (std::isnan(row.bias)) {
      entry["bias"] = nullptr;
    } else {
      entry["bias"] = row.bias;
    }
    aggregates.push_back(std::move(entry));
  }
  j["aggregates"] = std::move(aggregates);
  json failures = json::array();
  for (const FailureRecord& f : result.failures) {
    failures.push_back({{"method", method_name(f.method)},
                        {"n", f.n},
                        {"replicate", f.replicate},
                        {"seed", f.seed},
                        {"message", f.message}});
  }
  j["failures"] = std::move(failures);
  j["planned_fits"] = result.planned_fits;
  write_json_file(j, json_path);
}

void save_response_quartiles(const std::vector<ResponseQuartilesRow>& rows,
                             const std::string& csv_path) {
  CsvWriter writer(csv_path);
  writer.write_row({"scope", "response", "q25", "q50", "q75"});
  for (const ResponseQuartilesRow& row : rows) {
    writer.write_row({row.scope, std::to_string(row.response),
                      format_double(row.q25), format_double(row.q50),
                      format_double(row.q75)});
  }
  writer.close();
}

void save_contraction(const std::vector<ContractionRow>& rows,
                      const std::string& csv_path) {
  CsvWriter writer(csv_path);
  writer.write_row(
      {"n", "method", "hellinger_sq", "bias_emp_hires", "bias_emp_seps",
       "ci_width"});
  for (const ContractionRow& row : rows) {
    writer.write_row({std::to_string(row.n), row.method,
                      format_double(row.hellinger_sq),
                      format_double(row.bias_emp_hires),
                      format_double(row.bias_emp_seps),
                      format_double(row.ci_width)});
  }
  writer.close();
}

}  // namespace pseudopost
