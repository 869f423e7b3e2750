// Command-line front end: generation, sampling, fitting, diagnostics, and the
// replication study as reproducible batch runs.  All numeric behavior lives in
// the library; this file only parses options, wires files together, and writes
// a run manifest next to each primary output.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pseudopost/design.hpp"
#include "pseudopost/diagnostics.hpp"
#include "pseudopost/errors.hpp"
#include "pseudopost/io.hpp"
#include "pseudopost/manifest.hpp"
#include "pseudopost/model.hpp"
#include "pseudopost/population.hpp"
#include "pseudopost/rng.hpp"
#include "pseudopost/simulation.hpp"

namespace {

using nlohmann::json;
using namespace pseudopost;

int default_workers() {
  const char* env = std::getenv("PSEUDOPOST_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    const int value = std::stoi(env);
    if (value < 1) throw ConfigError("");
    return value;
  } catch (const std::exception&) {
    throw ConfigError(
        "PSEUDOPOST_WORKERS must be a positive integer, got \"" +
        std::string(env) + "\"");
  }
}

std::string manifest_path_for(const std::string& primary_output) {
  return primary_output + ".manifest.json";
}

// Derives `<base>.report.json` from `<base>.csv` (appends when there is no
// .csv suffix).
std::string report_path_for(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(),
                       suffix) == 0) {
    return csv_path.substr(0, csv_path.size() - suffix.size()) +
           ".report.json";
  }
  return csv_path + ".report.json";
}

struct GenerateArgs {
  std::string out_path;
  int n_units = 8595;
  std::uint64_t seed = 20260825;
  int workers = 1;
  double mean_cap = 1e9;
  CovariateRecipe recipe;
};

int cmd_generate(const GenerateArgs& args) {
  RunManifest manifest;
  manifest.command = "generate";
  manifest.master_seed = args.seed;
  manifest.version = library_version();
  manifest.started_at = iso_timestamp_utc();

  ModelConfig config;
  config.n_units = args.n_units;
  config.mean_cap = args.mean_cap;
  config.recipe = args.recipe;
  config.validate();

  manifest.config_echo =
      json{{"out", args.out_path},
           {"n", args.n_units},
           {"seed", args.seed},
           {"workers", args.workers},
           {"mean_cap", args.mean_cap},
           {"recipe",
            {{"log_size_location", args.recipe.log_size_location},
             {"log_size_scale", args.recipe.log_size_scale},
             {"log_size_clamp", args.recipe.log_size_clamp},
             {"open_noise_sd", args.recipe.open_noise_sd},
             {"size_floor", args.recipe.size_floor},
             {"size_coupling", args.recipe.size_coupling},
             {"size_noise_floor", args.recipe.size_noise_floor}}}}
          .dump();

  const FinitePopulation pop = generate_population(
      config, default_generating_params(), args.seed, args.workers);
  save_population(pop, args.out_path, args.seed);
  manifest.add_output(args.out_path);
  manifest.add_output(sidecar_path_for(args.out_path));

  manifest.finished_at = iso_timestamp_utc();
  write_manifest(manifest, manifest_path_for(args.out_path));
  std::cout << "wrote " << args.out_path << " (" << pop.n_units()
            << " units)\n";
  return 0;
}

struct SampleArgs {
  std::string population_path;
  std::string out_path;
  std::string report_path;  // empty: derived from out_path
  std::string kind = "pps";
  int n = 0;
  double power = 0.5;
  std::uint64_t seed = 1;
};

int cmd_sample(const SampleArgs& args) {
  RunManifest manifest;
  manifest.command = "sample";
  manifest.master_seed = args.seed;
  manifest.version = library_version();
  manifest.started_at = iso_timestamp_utc();

  const std::string report_path =
      args.report_path.empty() ? report_path_for(args.out_path)
                               : args.report_path;
  manifest.config_echo = json{{"population", args.population_path},
                              {"out", args.out_path},
                              {"report", report_path},
                              {"kind", args.kind},
                              {"n", args.n},
                              {"power", args.power},
                              {"seed", args.seed}}
                             .dump();

  const FinitePopulation pop = load_population(args.population_path);
  manifest.add_input(args.population_path);

  SamplingDesign design;
  design.kind = design_kind_from_name(args.kind);
  design.target_n = args.n;
  design.size_power = args.power;
  design.validate(pop.n_units());

  const InclusionProbabilities probs = compute_inclusion_probs(pop, design);
  const ObservedSample sample = draw_sample(pop, probs, design, args.seed);
  save_sample(sample, args.out_path);
  manifest.add_output(args.out_path);

  const DesignDiagnosticsReport report =
      design_report(pop, probs, design, {sample});
  save_design_report(report, design, report_path);
  manifest.add_output(report_path);

  manifest.finished_at = iso_timestamp_utc();
  write_manifest(manifest, manifest_path_for(args.out_path));
  std::cout << "wrote " << args.out_path << " (" << sample.size()
            << " units, " << report.certainty_count << " certainties)\n";
  return 0;
}

struct FitArgs {
  std::string sample_path;
  std::string draws_path;
  std::string summary_path;
  FitConfig config;
};

int cmd_fit(const FitArgs& args) {
  RunManifest manifest;
  manifest.command = "fit";
  manifest.master_seed = args.config.seed;
  manifest.version = library_version();
  manifest.started_at = iso_timestamp_utc();
  manifest.config_echo = json{{"sample", args.sample_path},
                              {"out_draws", args.draws_path},
                              {"out_summary", args.summary_path},
                              {"n_iter", args.config.n_iter},
                              {"burn_in", args.config.burn_in},
                              {"thin", args.config.thin},
                              {"seed", args.config.seed},
                              {"weighted", args.config.weighted},
                              {"workers", args.config.n_workers}}
                             .dump();

  args.config.validate();
  const ObservedSample sample = load_sample(args.sample_path);
  manifest.add_input(args.sample_path);

  const PosteriorDraws draws = fit(sample, args.config);
  save_draws(draws, args.draws_path);
  manifest.add_output(args.draws_path);
  save_fit_summary(draws, args.config, sample.size(), args.summary_path);
  manifest.add_output(args.summary_path);

  manifest.finished_at = iso_timestamp_utc();
  write_manifest(manifest, manifest_path_for(args.summary_path));
  std::cout << "wrote " << args.summary_path << " (" << draws.n_retained()
            << " retained draws)\n";
  return 0;
}

struct DiagnoseArgs {
  std::string population_path;
  std::vector<std::string> fit_paths;
  std::vector<std::string> labels;
  std::string out_path;
  int workers = 1;
};

int cmd_diagnose(const DiagnoseArgs& args) {
  if (!args.labels.empty() && args.labels.size() != args.fit_paths.size()) {
    throw ConfigError("diagnose: --label count (" +
                      std::to_string(args.labels.size()) +
                      ") must match --fit count (" +
                      std::to_string(args.fit_paths.size()) + ")");
  }

  RunManifest manifest;
  manifest.command = "diagnose";
  manifest.version = library_version();
  manifest.started_at = iso_timestamp_utc();
  manifest.config_echo = json{{"population", args.population_path},
                              {"fits", args.fit_paths},
                              {"labels", args.labels},
                              {"out", args.out_path},
                              {"workers", args.workers}}
                             .dump();

  const FinitePopulation pop = load_population(args.population_path);
  manifest.add_input(args.population_path);

  std::vector<ContractionFit> fits;
  for (std::size_t k = 0; k < args.fit_paths.size(); ++k) {
    const FitSummaryFile summary = load_fit_summary(args.fit_paths[k]);
    manifest.add_input(args.fit_paths[k]);
    ContractionFit entry;
    entry.method = k < args.labels.size()
                       ? args.labels[k]
                       : (summary.weighted ? "pseudo" : "unweighted");
    entry.sample_size = summary.sample_size;
    entry.coeff_mean = summary.coeff_mean;
    entry.resid_prec_mean = summary.resid_prec_mean;
    // Average credible-interval width of the focus coefficients (the
    // employment row, both outcomes).
    double width_sum = 0.0;
    int width_count = 0;
    for (int d = 0; d < summary.n_outcomes; ++d) {
      for (const ScalarSummary& s : summary.parameters) {
        if (s.name == coeff_name(kEmploymentColumn, d)) {
          width_sum += s.q975 - s.q025;
          ++width_count;
        }
      }
    }
    entry.ci_width = width_count > 0 ? width_sum / width_count : 0.0;
    fits.push_back(std::move(entry));
  }

  const std::vector<ContractionRow> rows =
      contraction_curve(pop, fits, kEmploymentColumn, args.workers);
  save_contraction(rows, args.out_path);
  manifest.add_output(args.out_path);

  manifest.finished_at = iso_timestamp_utc();
  write_manifest(manifest, manifest_path_for(args.out_path));
  std::cout << "wrote " << args.out_path << " (" << rows.size() << " rows)\n";
  return 0;
}

struct StudyArgs {
  std::string out_dir;
  StudyConfig config;
  bool desk = false;
};

int cmd_study(StudyArgs args) {
  if (args.desk) {
    StudyConfig preset = desk_study_config();
    preset.population_path = args.config.population_path;
    preset.n_workers = args.config.n_workers;
    args.config = preset;
  }

  RunManifest manifest;
  manifest.command = "study";
  manifest.master_seed = args.config.master_seed;
  manifest.version = library_version();
  manifest.started_at = iso_timestamp_utc();
  std::vector<std::string> method_names;
  for (StudyMethod m : args.config.methods)
    method_names.emplace_back(method_name(m));
  manifest.config_echo = json{{"out_dir", args.out_dir},
                              {"population", args.config.population_path},
                              {"n_units", args.config.model.n_units},
                              {"sizes", args.config.sample_sizes},
                              {"replicates", args.config.n_replicates},
                              {"methods", method_names},
                              {"n_iter", args.config.n_iter},
                              {"burn_in", args.config.burn_in},
                              {"thin", args.config.thin},
                              {"size_power", args.config.size_power},
                              {"master_seed", args.config.master_seed},
                              {"workers", args.config.n_workers},
                              {"desk", args.desk}}
                             .dump();

  args.config.validate();

  // Matches the fallback generation inside run_study(config): the quartile
  // table below must describe the same frame the study ran on.
  FinitePopulation pop;
  if (args.config.population_path.empty()) {
    pop = generate_population(args.config.model, default_generating_params(),
                              derive_seed(args.config.master_seed, 0x737475ULL),
                              args.config.n_workers);
  } else {
    pop = load_population(args.config.population_path);
    manifest.add_input(args.config.population_path);
  }

  const StudyResult result = run_study(args.config, pop);

  const std::string replicates_path = args.out_dir + "/replicates.csv";
  const std::string aggregate_path = args.out_dir + "/aggregate.json";
  const std::string quartiles_path = args.out_dir + "/quartiles.csv";
  save_study_replicates(result, replicates_path);
  manifest.add_output(replicates_path);
  save_study_aggregate(result, args.config, aggregate_path);
  manifest.add_output(aggregate_path);

  // Response quartiles: the population against one informative sample per
  // study size (deterministic in the master seed).
  std::vector<std::pair<int, ObservedSample>> samples_by_size;
  SamplingDesign design;
  design.kind = DesignKind::kPpsFixedSize;
  design.size_power = args.config.size_power;
  for (int n : args.config.sample_sizes) {
    design.target_n = n;
    const InclusionProbabilities probs = compute_inclusion_probs(pop, design);
    samples_by_size.emplace_back(
        n, draw_sample(pop, probs, design,
                       derive_seed(args.config.master_seed, 0x71ULL,
                                   std::uint64_t(n))));
  }
  save_response_quartiles(summarize_distributions(pop, samples_by_size),
                          quartiles_path);
  manifest.add_output(quartiles_path);

  manifest.finished_at = iso_timestamp_utc();
  write_manifest(manifest, manifest_path_for(aggregate_path));
  std::cout << "wrote " << args.out_dir << " (" << result.planned_fits
            << " fits, " << result.failures.size() << " failures)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian count-data inference under informative sampling"};
  app.require_subcommand(1);

  int workers = 1;
  try {
    workers = default_workers();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  GenerateArgs gen;
  gen.workers = workers;
  CLI::App* generate = app.add_subcommand(
      "generate", "Generate a synthetic finite population");
  generate->set_config("--config");
  generate->add_option("--out", gen.out_path, "Population CSV path")
      ->required();
  generate->add_option("--n", gen.n_units, "Number of population units");
  generate->add_option("--seed", gen.seed, "Generation seed");
  generate->add_option("--workers", gen.workers, "Worker threads");
  generate->add_option("--mean-cap", gen.mean_cap,
                       "Upper bound on any unit's expected count");
  generate->add_option("--size-location", gen.recipe.log_size_location,
                       "Location of the log size distribution");
  generate->add_option("--size-scale", gen.recipe.log_size_scale,
                       "Scale of the log size distribution");
  generate->add_option("--size-clamp", gen.recipe.log_size_clamp,
                       "Winsorization width in scale units");
  generate->add_option("--open-noise-sd", gen.recipe.open_noise_sd,
                       "Noise sd of the log-openings covariate");
  generate->add_option("--size-floor", gen.recipe.size_floor,
                       "Additive floor of the sampling size measure");
  generate->add_option("--size-coupling", gen.recipe.size_coupling,
                       "Residual coupling of the size measure");
  generate->add_option("--size-noise-floor", gen.recipe.size_noise_floor,
                       "Lower bound of the size shock in (0, 1]");

  SampleArgs smp;
  CLI::App* sample =
      app.add_subcommand("sample", "Draw one sample from a population");
  sample->set_config("--config");
  sample->add_option("--population", smp.population_path, "Population CSV")
      ->required();
  sample->add_option("--out", smp.out_path, "Sample CSV path")->required();
  sample->add_option("--report", smp.report_path,
                     "Design report JSON path (default: derived from --out)");
  sample->add_option("--kind", smp.kind, "Design kind: pps, poisson, srs");
  sample->add_option("--n", smp.n, "Target sample size")->required();
  sample->add_option("--power", smp.power, "Size-measure exponent");
  sample->add_option("--seed", smp.seed, "Sampling seed");

  FitArgs fit_args;
  fit_args.config.n_workers = workers;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Run the Gibbs sampler");
  fit_cmd->set_config("--config");
  fit_cmd->add_option("--sample", fit_args.sample_path, "Sample CSV")
      ->required();
  fit_cmd->add_option("--out-draws", fit_args.draws_path, "Draws CSV path")
      ->required();
  fit_cmd
      ->add_option("--out-summary", fit_args.summary_path, "Summary JSON path")
      ->required();
  fit_cmd->add_option("--iters", fit_args.config.n_iter, "Total iterations");
  fit_cmd->add_option("--burn-in", fit_args.config.burn_in,
                      "Discarded initial iterations");
  fit_cmd->add_option("--thin", fit_args.config.thin, "Thinning stride");
  fit_cmd->add_option("--seed", fit_args.config.seed, "Chain seed");
  fit_cmd->add_option("--workers", fit_args.config.n_workers,
                      "Worker threads");
  fit_cmd->add_flag("--weighted,!--unweighted", fit_args.config.weighted,
                    "Exponentiate each unit's likelihood by its weight");

  DiagnoseArgs diag;
  diag.workers = workers;
  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "Distance-to-truth table for fitted models");
  diagnose->set_config("--config");
  diagnose
      ->add_option("--population", diag.population_path,
                   "Population CSV with generating parameters")
      ->required();
  diagnose->add_option("--fit", diag.fit_paths, "Fit summary JSON (repeat)")
      ->required();
  diagnose->add_option("--label", diag.labels,
                       "Method label per fit (default: pseudo/unweighted)");
  diagnose->add_option("--out", diag.out_path, "Contraction CSV path")
      ->required();
  diagnose->add_option("--workers", diag.workers, "Worker threads");

  StudyArgs study;
  study.config.n_workers = workers;
  CLI::App* study_cmd =
      app.add_subcommand("study", "Run the replication study");
  study_cmd->set_config("--config");
  study_cmd->add_option("--out-dir", study.out_dir, "Output directory")
      ->required();
  study_cmd->add_option("--population", study.config.population_path,
                        "Population CSV (default: generate one)");
  study_cmd->add_option("--n", study.config.model.n_units,
                        "Generated population size");
  study_cmd->add_option("--sizes", study.config.sample_sizes,
                        "Sample sizes (repeat or comma-separate)")
      ->delimiter(',');
  study_cmd->add_option("--replicates", study.config.n_replicates,
                        "Replicates per size");
  std::vector<std::string> method_names;
  study_cmd->add_option("--methods", method_names,
                        "Estimators to run (repeat or comma-separate)")
      ->delimiter(',');
  study_cmd->add_option("--iters", study.config.n_iter, "Total iterations");
  study_cmd->add_option("--burn-in", study.config.burn_in,
                        "Discarded initial iterations");
  study_cmd->add_option("--thin", study.config.thin, "Thinning stride");
  study_cmd->add_option("--power", study.config.size_power,
                        "Size-measure exponent");
  study_cmd->add_option("--master-seed", study.config.master_seed,
                        "Master seed");
  study_cmd->add_option("--workers", study.config.n_workers,
                        "Worker threads");
  study_cmd->add_option("--max-failure-fraction",
                        study.config.max_failure_fraction,
                        "Abort threshold for failed fits");
  study_cmd->add_flag("--desk", study.desk,
                      "Use the desk-scale replication preset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are configuration errors
  }

  try {
    if (!method_names.empty()) {
      study.config.methods.clear();
      for (const std::string& name : method_names)
        study.config.methods.push_back(method_from_name(name));
    }
    if (app.got_subcommand(generate)) return cmd_generate(gen);
    if (app.got_subcommand(sample)) return cmd_sample(smp);
    if (app.got_subcommand(fit_cmd)) return cmd_fit(fit_args);
    if (app.got_subcommand(diagnose)) return cmd_diagnose(diag);
    if (app.got_subcommand(study_cmd)) return cmd_study(std::move(study));
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
