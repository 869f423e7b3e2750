// End-to-end checks of the command-line binary: pipeline wiring, exit codes,
// and reproducibility of emitted files.  The binary path is injected by the
// build as PSEUDOPOST_CLI_PATH.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "pseudopost/manifest.hpp"
#include "support.hpp"

namespace {

const char* cli_path() { return PSEUDOPOST_CLI_PATH; }

int run_cli(const std::string& args, const std::string& log_path) {
  const std::string cmd = std::string(cli_path()) + " " + args + " > " +
                          log_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

bool file_exists(const std::string& path) {
  return std::ifstream(path).good();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("the full pipeline runs and leaves manifests behind") {
  testsupport::TempDir dir("cli_pipeline");
  const std::string pop = dir.file("pop.csv");
  const std::string log = dir.file("log.txt");

  CHECK(run_cli("generate --out " + pop + " --n 300 --seed 11", log) == 0);
  CHECK(file_exists(pop));
  CHECK(file_exists(dir.file("pop.json")));
  CHECK(file_exists(pop + ".manifest.json"));

  const std::string sample = dir.file("sample.csv");
  CHECK(run_cli("sample --population " + pop + " --out " + sample +
                    " --kind pps --n 60 --seed 12",
                log) == 0);
  CHECK(file_exists(sample));
  CHECK(file_exists(dir.file("sample.report.json")));
  CHECK(file_exists(sample + ".manifest.json"));

  const std::string draws = dir.file("draws.csv");
  const std::string summary = dir.file("fit.json");
  CHECK(run_cli("fit --sample " + sample + " --out-draws " + draws +
                    " --out-summary " + summary +
                    " --iters 40 --burn-in 10 --seed 13",
                log) == 0);
  CHECK(file_exists(draws));
  CHECK(file_exists(summary));
  CHECK(file_exists(summary + ".manifest.json"));

  const std::string contraction = dir.file("contraction.csv");
  CHECK(run_cli("diagnose --population " + pop + " --fit " + summary +
                    " --out " + contraction,
                log) == 0);
  CHECK(file_exists(contraction));
  CHECK(file_exists(contraction + ".manifest.json"));

  const std::string study_dir = dir.file("study");
  REQUIRE(std::system(("mkdir -p " + study_dir).c_str()) == 0);
  CHECK(run_cli("study --out-dir " + study_dir + " --population " + pop +
                    " --sizes 40 --replicates 1 --iters 20 --burn-in 5 "
                    "--master-seed 14",
                log) == 0);
  CHECK(file_exists(study_dir + "/replicates.csv"));
  CHECK(file_exists(study_dir + "/aggregate.json"));
  CHECK(file_exists(study_dir + "/quartiles.csv"));
  CHECK(file_exists(study_dir + "/aggregate.json.manifest.json"));
}

TEST_CASE("repeated runs reproduce output files byte for byte") {
  testsupport::TempDir dir("cli_repro");
  const std::string log = dir.file("log.txt");
  const std::string pop_a = dir.file("a.csv");
  const std::string pop_b = dir.file("b.csv");
  REQUIRE(run_cli("generate --out " + pop_a + " --n 250 --seed 77", log) == 0);
  REQUIRE(run_cli("generate --out " + pop_b + " --n 250 --seed 77", log) == 0);
  CHECK(pseudopost::file_digest(pop_a) == pseudopost::file_digest(pop_b));
  CHECK(read_text(dir.file("a.json")) == read_text(dir.file("b.json")));

  const std::string sample = dir.file("sample.csv");
  REQUIRE(run_cli("sample --population " + pop_a + " --out " + sample +
                      " --n 50 --seed 5",
                  log) == 0);
  const std::string draws_a = dir.file("draws_a.csv");
  const std::string draws_b = dir.file("draws_b.csv");
  REQUIRE(run_cli("fit --sample " + sample + " --out-draws " + draws_a +
                      " --out-summary " + dir.file("fit_a.json") +
                      " --iters 30 --burn-in 10 --seed 9",
                  log) == 0);
  REQUIRE(run_cli("fit --sample " + sample + " --out-draws " + draws_b +
                      " --out-summary " + dir.file("fit_b.json") +
                      " --iters 30 --burn-in 10 --seed 9",
                  log) == 0);
  CHECK(pseudopost::file_digest(draws_a) == pseudopost::file_digest(draws_b));
}

TEST_CASE("the worker count does not change emitted draws") {
  testsupport::TempDir dir("cli_workers");
  const std::string log = dir.file("log.txt");
  const std::string pop = dir.file("pop.csv");
  REQUIRE(run_cli("generate --out " + pop + " --n 250 --seed 21", log) == 0);
  const std::string sample = dir.file("sample.csv");
  REQUIRE(run_cli("sample --population " + pop + " --out " + sample +
                      " --n 50 --seed 22",
                  log) == 0);
  const std::string one = dir.file("one.csv");
  const std::string many = dir.file("many.csv");
  REQUIRE(run_cli("fit --sample " + sample + " --out-draws " + one +
                      " --out-summary " + dir.file("one.json") +
                      " --iters 30 --burn-in 10 --seed 3 --workers 1",
                  log) == 0);
  // Worker default picked up from the environment as well.
  const std::string cmd = "PSEUDOPOST_WORKERS=3 " + std::string(cli_path()) +
                          " fit --sample " + sample + " --out-draws " + many +
                          " --out-summary " + dir.file("many.json") +
                          " --iters 30 --burn-in 10 --seed 3 > " + log +
                          " 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(pseudopost::file_digest(one) == pseudopost::file_digest(many));
}

TEST_CASE("weighted and unweighted runs coincide on a uniform-weight sample") {
  testsupport::TempDir dir("cli_uniform");
  const std::string log = dir.file("log.txt");
  const std::string pop = dir.file("pop.csv");
  REQUIRE(run_cli("generate --out " + pop + " --n 150 --seed 31", log) == 0);
  // srs of the whole population: every weight is exactly one.
  const std::string census = dir.file("census.csv");
  REQUIRE(run_cli("sample --population " + pop + " --out " + census +
                      " --kind srs --n 150 --seed 32",
                  log) == 0);
  const std::string weighted = dir.file("weighted.csv");
  const std::string plain = dir.file("plain.csv");
  REQUIRE(run_cli("fit --sample " + census + " --out-draws " + weighted +
                      " --out-summary " + dir.file("weighted.json") +
                      " --weighted --iters 25 --burn-in 5 --seed 8",
                  log) == 0);
  REQUIRE(run_cli("fit --sample " + census + " --out-draws " + plain +
                      " --out-summary " + dir.file("plain.json") +
                      " --unweighted --iters 25 --burn-in 5 --seed 8",
                  log) == 0);
  CHECK(pseudopost::file_digest(weighted) == pseudopost::file_digest(plain));
}

TEST_CASE("exit codes follow the contract") {
  testsupport::TempDir dir("cli_exits");
  const std::string log = dir.file("log.txt");
  const std::string pop = dir.file("pop.csv");
  REQUIRE(run_cli("generate --out " + pop + " --n 100 --seed 41", log) == 0);

  SUBCASE("invalid sample size is a configuration error") {
    CHECK(run_cli("sample --population " + pop + " --out " +
                      dir.file("s.csv") + " --n 0",
                  log) == 2);
  }
  SUBCASE("missing population file is an I/O error") {
    CHECK(run_cli("sample --population " + dir.file("absent.csv") +
                      " --out " + dir.file("s.csv") + " --n 10",
                  log) == 3);
  }
  SUBCASE("burn-in at or past the iteration budget is a configuration error") {
    const std::string sample = dir.file("sample.csv");
    REQUIRE(run_cli("sample --population " + pop + " --out " + sample +
                        " --n 20 --seed 42",
                    log) == 0);
    CHECK(run_cli("fit --sample " + sample + " --out-draws " +
                      dir.file("d.csv") + " --out-summary " +
                      dir.file("f.json") + " --iters 50 --burn-in 50",
                  log) == 2);
  }
  SUBCASE("unknown flags are configuration errors") {
    CHECK(run_cli("generate --out " + dir.file("x.csv") + " --bogus 1", log) ==
          2);
  }
  SUBCASE("generation recipe validation failures name the field") {
    CHECK(run_cli("generate --out " + dir.file("y.csv") +
                      " --size-noise-floor 0",
                  log) == 2);
    const std::string text = read_text(log);
    CHECK(text.find("size_noise_floor") != std::string::npos);
  }
  SUBCASE("help exits cleanly") {
    CHECK(run_cli("--help", log) == 0);
    CHECK(run_cli("fit --help", log) == 0);
  }
}
