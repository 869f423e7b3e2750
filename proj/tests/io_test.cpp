#include "pseudopost/io.hpp"

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <doctest/doctest.h>
#include <nlohmann/json.hpp>

#include "pseudopost/csv.hpp"
#include "pseudopost/design.hpp"
#include "pseudopost/errors.hpp"
#include "pseudopost/manifest.hpp"
#include "pseudopost/model.hpp"
#include "pseudopost/population.hpp"
#include "pseudopost/simulation.hpp"
#include "support.hpp"

using namespace pseudopost;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("format_double round-trips exact values") {
  for (double v : {0.0, 1.0, -1.0, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23,
                   -2.2250738585072014e-308}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("sidecar_path_for swaps the csv extension") {
  CHECK(sidecar_path_for("pop.csv") == "pop.json");
  CHECK(sidecar_path_for("/a/b/frame.csv") == "/a/b/frame.json");
  CHECK(sidecar_path_for("noext") == "noext.json");
}

TEST_CASE("population save/load round-trips bit-exactly") {
  testsupport::TempDir dir("popio");
  ModelConfig config;
  config.n_units = 80;
  const FinitePopulation pop =
      generate_population(config, default_generating_params(), 404);
  const std::string path = dir.file("pop.csv");
  save_population(pop, path, 404);

  const FinitePopulation loaded = load_population(path);
  CHECK(loaded.responses == pop.responses);
  CHECK(loaded.covariates == pop.covariates);
  CHECK(loaded.size_measure == pop.size_measure);
  REQUIRE(loaded.true_params.has_value());
  CHECK(loaded.true_params->coeffs == pop.true_params->coeffs);
  CHECK(loaded.true_params->resid_prec == pop.true_params->resid_prec);
  CHECK(loaded.true_params->pred_prec == pop.true_params->pred_prec);
  CHECK(loaded.true_params->coeff_shrink == pop.true_params->coeff_shrink);

  // Header layout: unit_id, y_*, x_*, size.
  const CsvTable table = read_csv(path);
  CHECK(table.header.front() == "unit_id");
  CHECK(table.header[1] == "y_1");
  CHECK(table.header[3] == "x_1");
  CHECK(table.header.back() == "size");
  CHECK(table.rows.size() == 80);
  // unit_id is 1-based.
  CHECK(table.rows[0][0] == "1");
  CHECK(table.rows[79][0] == "80");
}

TEST_CASE("population load works without a sidecar") {
  testsupport::TempDir dir("popnoside");
  ModelConfig config;
  config.n_units = 30;
  const FinitePopulation pop =
      generate_population(config, default_generating_params(), 9);
  const std::string path = dir.file("pop.csv");
  save_population(pop, path);
  std::remove(sidecar_path_for(path).c_str());
  const FinitePopulation loaded = load_population(path);
  CHECK(loaded.responses == pop.responses);
  CHECK_FALSE(loaded.true_params.has_value());
}

TEST_CASE("sample save/load round-trips bit-exactly") {
  testsupport::TempDir dir("sampio");
  const ObservedSample sample = testsupport::make_sample(25, 2, 3, 77);
  const std::string path = dir.file("sample.csv");
  save_sample(sample, path);
  const ObservedSample loaded = load_sample(path);
  CHECK(loaded.unit_ids == sample.unit_ids);
  CHECK(loaded.responses == sample.responses);
  CHECK(loaded.covariates == sample.covariates);
  CHECK(loaded.size_measure == sample.size_measure);
  CHECK(loaded.pi == sample.pi);
  CHECK(loaded.raw_weights == sample.raw_weights);
  CHECK(loaded.normalized_weights == sample.normalized_weights);

  const CsvTable table = read_csv(path);
  CHECK(table.header.back() == "w_norm");
  CHECK(table.header[table.header.size() - 2] == "w_raw");
  CHECK(table.header[table.header.size() - 3] == "pi");
}

TEST_CASE("draws CSV lays out coefficients then precision then shrink") {
  testsupport::TempDir dir("drawsio");
  const ObservedSample sample = testsupport::make_sample(20, 2, 3, 13);
  FitConfig config;
  config.n_iter = 12;
  config.burn_in = 4;
  config.seed = 3;
  const PosteriorDraws draws = fit(sample, config);
  const std::string path = dir.file("draws.csv");
  save_draws(draws, path);

  const CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {
      "b_1_1", "b_2_1", "b_3_1", "b_1_2", "b_2_2", "b_3_2",
      "lambda_1_1", "lambda_2_2", "lambda_2_1", "tau"};
  CHECK(table.header == expected);
  REQUIRE(int(table.rows.size()) == draws.n_retained());
  // Spot-check a value against the draw matrix.
  CHECK(parse_double_cell(table, 0, 0, path) == draws.coeff_draws(0, 0));
  CHECK(parse_double_cell(table, 3, 9, path) == draws.shrink_draws[3]);
}

TEST_CASE("fit summary JSON round-trips through load_fit_summary") {
  testsupport::TempDir dir("fitio");
  const ObservedSample sample = testsupport::make_sample(20, 2, 3, 14);
  FitConfig config;
  config.n_iter = 12;
  config.burn_in = 4;
  config.seed = 4;
  config.weighted = false;
  const PosteriorDraws draws = fit(sample, config);
  const std::string path = dir.file("fit.json");
  save_fit_summary(draws, config, sample.size(), path);

  const FitSummaryFile summary = load_fit_summary(path);
  CHECK(summary.sample_size == 20);
  CHECK(summary.weighted == false);
  CHECK(summary.n_predictors == 3);
  CHECK(summary.n_outcomes == 2);
  CHECK(summary.coeff_mean == draws.coeff_mean());
  CHECK(summary.resid_prec_mean == draws.resid_prec_mean());
  CHECK(summary.parameters.size() == draws.summaries.size());
  CHECK(summary.parameters[0].name == draws.summaries[0].name);
  CHECK(summary.parameters[0].mean == draws.summaries[0].mean);

  // The config echo is embedded.
  const nlohmann::json doc = nlohmann::json::parse(read_text(path));
  CHECK(doc.at("config").at("n_iter").get<int>() == 12);
  CHECK(doc.at("config").at("seed").get<std::uint64_t>() == 4);
}

TEST_CASE("design report JSON carries nulls when pairwise stats are absent") {
  testsupport::TempDir dir("designio");
  DesignDiagnosticsReport report;
  report.target_n = 500;
  report.mean_realized_n = 500.0;
  report.certainty_count = 56;
  report.min_pi = 0.02;
  report.max_pi = 1.0;
  report.cv_pi = 2.11;
  report.cor_response_pi = {0.8, 0.75};
  report.gamma = 50.0;
  report.sampling_fraction = 500.0 / 8595.0;
  SamplingDesign design;
  design.kind = DesignKind::kPpsFixedSize;
  design.target_n = 500;

  const std::string path = dir.file("report.json");
  save_design_report(report, design, path);
  nlohmann::json doc = nlohmann::json::parse(read_text(path));
  CHECK(doc.at("design").at("kind").get<std::string>() == "pps");
  CHECK(doc.at("certainty_count").get<int>() == 56);
  CHECK(doc.at("a5_max_ratio").is_null());
  CHECK(doc.at("c3_proxy").is_null());
  CHECK(doc.at("cor_response_pi").size() == 2);

  report.a5_max_ratio = 0.0;
  report.c3_proxy = 17.0;
  design.kind = DesignKind::kPoisson;
  save_design_report(report, design, path);
  doc = nlohmann::json::parse(read_text(path));
  CHECK(doc.at("a5_max_ratio").get<double>() == 0.0);
  CHECK(doc.at("c3_proxy").get<double>() == 17.0);
}

TEST_CASE("study outputs have the documented schemas") {
  testsupport::TempDir dir("studyio");
  StudyConfig config;
  config.model.n_units = 150;
  config.sample_sizes = {30};
  config.n_replicates = 1;
  config.n_iter = 20;
  config.burn_in = 5;
  config.master_seed = 2;
  const StudyResult result = run_study(config);

  const std::string rep_path = dir.file("replicates.csv");
  save_study_replicates(result, rep_path);
  const CsvTable reps = read_csv(rep_path);
  CHECK(reps.header == std::vector<std::string>{"method", "n", "replicate",
                                               "param", "mean", "q025",
                                               "q975"});
  CHECK(reps.rows.size() == result.replicate_rows.size());

  const std::string agg_path = dir.file("aggregate.json");
  save_study_aggregate(result, config, agg_path);
  const nlohmann::json doc = nlohmann::json::parse(read_text(agg_path));
  CHECK(doc.at("config").at("master_seed").get<std::uint64_t>() == 2);
  CHECK(doc.at("planned_fits").get<int>() == result.planned_fits);
  CHECK(doc.at("aggregates").is_array());
  CHECK(doc.at("failures").is_array());
  CHECK(doc.at("failures").empty());
  bool found_reference = false;
  for (const auto& row : doc.at("aggregates")) {
    if (row.at("method") == "population_posterior" &&
        row.at("param") == "b_8_1") {
      found_reference = true;
      CHECK(row.at("bias").get<double>() == 0.0);
    }
  }
  CHECK(found_reference);
}

TEST_CASE("quartile and contraction CSVs match their schemas") {
  testsupport::TempDir dir("tablesio");
  const std::vector<ResponseQuartilesRow> quartiles = {
      {"population", 1, 1.0, 2.0, 4.0}, {"n=500", 1, 2.0, 3.0, 6.0}};
  const std::string qpath = dir.file("quartiles.csv");
  save_response_quartiles(quartiles, qpath);
  const CsvTable qt = read_csv(qpath);
  CHECK(qt.header ==
        std::vector<std::string>{"scope", "response", "q25", "q50", "q75"});
  CHECK(qt.rows.size() == 2);
  CHECK(qt.rows[1][0] == "n=500");

  const std::vector<ContractionRow> contraction = {
      {500, "pseudo", 0.012, -0.004, 0.003, 0.11}};
  const std::string cpath = dir.file("contraction.csv");
  save_contraction(contraction, cpath);
  const CsvTable ct = read_csv(cpath);
  CHECK(ct.header == std::vector<std::string>{"n", "method", "hellinger_sq",
                                              "bias_emp_hires",
                                              "bias_emp_seps", "ci_width"});
  CHECK(ct.rows[0][1] == "pseudo");
  CHECK(parse_double_cell(ct, 0, 2, cpath) == 0.012);
}

TEST_CASE("read_csv reports structural problems with a line number") {
  testsupport::TempDir dir("csverr");
  const std::string path = dir.file("bad.csv");
  write_text(path, "a,b\n1,2\n3\n");
  try {
    read_csv(path);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("3") != std::string::npos);  // offending line
  }
  CHECK_THROWS_AS(read_csv(dir.file("missing.csv")), IoError);
}

TEST_CASE("cell parsers carry row and column context") {
  testsupport::TempDir dir("cellerr");
  const std::string path = dir.file("cells.csv");
  write_text(path, "a,b\n1,notanumber\n");
  const CsvTable table = read_csv(path);
  try {
    parse_double_cell(table, 0, 1, path);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("b") != std::string::npos);
    CHECK(msg.find(path) != std::string::npos);
  }
  CHECK_THROWS_AS(parse_int_cell(table, 0, 1, path), IoError);
  CHECK(parse_int_cell(table, 0, 0, path) == 1);
}

TEST_CASE("loading a malformed population file raises IoError") {
  testsupport::TempDir dir("poperr");
  const std::string path = dir.file("pop.csv");
  SUBCASE("missing required columns") {
    write_text(path, "unit_id,foo\n1,2\n");
    CHECK_THROWS_AS(load_population(path), IoError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_population(path), IoError);
  }
  SUBCASE("corrupt sidecar") {
    ModelConfig config;
    config.n_units = 10;
    save_population(generate_population(config, default_generating_params(), 1),
                    path);
    write_text(sidecar_path_for(path), "{not json");
    CHECK_THROWS_AS(load_population(path), IoError);
  }
}

TEST_CASE("fnv1a matches the published test vectors") {
  CHECK(fnv1a_digest("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a_digest("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a_digest("foobar", 6) == 0x85944171f73967e8ULL);
  CHECK(digest_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("file_digest equals the in-memory digest of the same bytes") {
  testsupport::TempDir dir("digest");
  const std::string path = dir.file("blob.bin");
  const std::string payload = "pseudo-posterior digest check\n";
  write_text(path, payload);
  CHECK(file_digest(path) == fnv1a_digest(payload.data(), payload.size()));
  CHECK_THROWS_AS(file_digest(dir.file("absent.bin")), IoError);
}

TEST_CASE("write_manifest emits the documented keys") {
  testsupport::TempDir dir("manifest");
  const std::string in_path = dir.file("in.txt");
  const std::string out_path = dir.file("out.txt");
  write_text(in_path, "input\n");
  write_text(out_path, "output\n");

  RunManifest manifest;
  manifest.command = "fit";
  manifest.config_echo = "{\"n_iter\": 100}";
  manifest.master_seed = 42;
  manifest.started_at = iso_timestamp_utc();
  manifest.add_input(in_path);
  manifest.add_output(out_path);
  manifest.finished_at = iso_timestamp_utc();
  manifest.version = library_version();

  const std::string path = dir.file("manifest.json");
  write_manifest(manifest, path);
  const nlohmann::json doc = nlohmann::json::parse(read_text(path));
  CHECK(doc.at("command").get<std::string>() == "fit");
  CHECK(doc.at("master_seed").get<std::uint64_t>() == 42);
  CHECK(doc.at("config").at("n_iter").get<int>() == 100);
  CHECK(doc.at("inputs").at(in_path).get<std::string>() ==
        digest_hex(file_digest(in_path)));
  CHECK(doc.at("outputs").at(out_path).get<std::string>() ==
        digest_hex(file_digest(out_path)));
  CHECK_FALSE(doc.at("started_at").get<std::string>().empty());
  CHECK_FALSE(doc.at("version").get<std::string>().empty());
}
