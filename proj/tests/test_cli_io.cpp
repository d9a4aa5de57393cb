#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "bandprufer/config.hpp"
#include "bandprufer/errors.hpp"
#include "bandprufer/runner.hpp"

using namespace bandprufer;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(static_cast<bool>(f));
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

// line/key expectations for a config that must be rejected
void expect_reject(const std::string& text, int line, const std::string& key,
                   const char* needle = nullptr) {
  bool threw = false;
  try {
    static_cast<void>(parse_config(text));
  } catch (const ConfigError& e) {
    threw = true;
    CHECK(e.line() == line);
    CHECK(e.key() == key);
    if (needle) CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
  CHECK(threw);
}
}  // namespace

TEST_CASE("a full continuum config parses with inline comments") {
  const RunConfig cfg = parse_config(
      "# scan the low bands\n"
      "mode = bands\n"
      "potential = cells; 1.0, 2.0, 3.0\n"
      "\n"
      "e_max = 12.5   # window top\n");
  CHECK(cfg.mode == RunMode::bands);
  REQUIRE(cfg.potential.has_value());
  CHECK(cfg.potential->kind == PotentialSpec::Kind::cells);
  REQUIRE(cfg.potential->cells.size() == 3);
  CHECK(cfg.potential->cells[1] == 2.0);
  REQUIRE(cfg.e_max.has_value());
  CHECK(*cfg.e_max == 12.5);
  CHECK_FALSE(cfg.is_discrete());
  CHECK(cfg.output == "bands");  // defaults to the mode name
}

TEST_CASE("jacobi, grids, lists, and perturbations parse field by field") {
  const RunConfig cfg = parse_config(
      "mode = gamma\n"
      "jacobi = 2; 1.0, 1.0; 0.5, -0.5\n"
      "energy_grid = 0.5:5.5:11\n"
      "energies = 1.0, 1.5\n"
      "output = sweep\n");
  CHECK(cfg.is_discrete());
  CHECK(cfg.jacobi->q == 2);
  CHECK(cfg.jacobi->b[1] == -0.5);
  REQUIRE(cfg.energy_grid.has_value());
  CHECK(cfg.energy_grid->lo == 0.5);
  CHECK(cfg.energy_grid->hi == 5.5);
  CHECK(cfg.energy_grid->count == 11);
  REQUIRE(cfg.energies.size() == 2);
  CHECK(cfg.output == "sweep");

  const RunConfig w = parse_config(
      "mode = wvn\n"
      "potential = free\n"
      "energy = 1.0\n"
      "amplitude = 2.0\n"
      "perturbation = wvn; 1.0; 2.0\n");
  CHECK(w.perturbation.kind == PerturbationSpec::Kind::wvn);
  CHECK(w.perturbation.target_energy == 1.0);
  CHECK(w.perturbation.amplitude == 2.0);

  const RunConfig li = parse_config(
      "mode = detect\n"
      "potential = free\n"
      "e_max = 9.9\n"
      "perturbation = log_inverse\n");
  CHECK(li.perturbation.kind == PerturbationSpec::Kind::log_inverse);
  CHECK(li.perturbation.amplitude == 1.0);  // amplitude defaults to 1
}

TEST_CASE("malformed configs are rejected with the offending line and key") {
  // required key missing: reported without a line
  expect_reject("potential = free\ne_max = 5\n", 0, "mode");
  // unknown key
  expect_reject("mode = bands\npotential = free\ne_max = 5\nbogus = 1\n", 4, "bogus",
                "unknown key");
  // malformed number
  expect_reject("mode = bands\npotential = free\ne_max = banana\n", 3, "e_max",
                "not a number");
  // duplicate key, message points at the first occurrence
  expect_reject("mode = bands\npotential = free\ne_max = 5\ne_max = 6\n", 4, "e_max",
                "first seen on line 3");
  // missing '='
  expect_reject("mode = bands\npotential = free\ne_max = 5\njust words\n", 4, "");
  // both operator families at once
  expect_reject(
      "mode = bands\npotential = free\njacobi = 1; 1.0; 0.0\ne_max = 5\n", 0,
      "potential");
  // neither family
  expect_reject("mode = gamma\nenergies = 1.0\n", 0, "potential");
  // grid needs at least two points
  expect_reject("mode = gamma\npotential = free\nenergy_grid = 0:1:1\n", 3, "energy_grid");
  // off-diagonal entries must stay positive
  expect_reject("mode = bands\njacobi = 1; 0.0; 0.0\n", 2, "jacobi", "positive");
  // wvn runs need an amplitude
  expect_reject("mode = wvn\npotential = free\nenergy = 1\n", 0, "amplitude");
  // horizon floor
  expect_reject("mode = prufer\npotential = free\nenergy = 1\nx_max = 5\n", 0, "x_max");
  // integer-valued keys reject fractions
  expect_reject("mode = bands\njacobi = 1; 1.0; 0.0\nn_max = 7.5\n", 3, "n_max",
                "integer");
  // referenced files must exist at parse time
  expect_reject("mode = bands\npotential = file; /nonexistent/v.txt\ne_max = 5\n", 2,
                "potential", "cannot open");
}

TEST_CASE("parse_config_file reports unreadable paths") {
  bool threw = false;
  try {
    static_cast<void>(parse_config_file("/nonexistent/run.cfg"));
  } catch (const ConfigError& e) {
    threw = true;
    CHECK(e.line() == 0);
    CHECK(std::string(e.what()).find("cannot open") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("csv output is byte-stable with 17 significant digits") {
  CHECK(csv_render({"a", "b"}, {{1.0, 0.5}}) == "a,b\n1,0.5\n");
  CHECK(csv_render({"x"}, {{0.1}}) == "x\n0.10000000000000001\n");
  CHECK(csv_render({"h1", "h2"}, {}) == "h1,h2\n");  // header even when empty
}

TEST_CASE("execute_run writes deterministic artifacts") {
  const RunConfig cfg = parse_config(
      "mode = bands\n"
      "jacobi = 1; 1.0; 0.0\n");
  const fs::path base = fs::temp_directory_path() / "bandprufer_test_cli";
  fs::remove_all(base);
  fs::create_directories(base / "one");
  fs::create_directories(base / "two");

  const RunOutput r1 = execute_run(cfg, (base / "one").string(), 1, 7);
  const RunOutput r2 = execute_run(cfg, (base / "two").string(), 1, 7);
  CHECK(r1.exit_code == 0);
  REQUIRE(fs::exists(base / "one" / "bands.csv"));
  REQUIRE(fs::exists(base / "one" / "bands.json"));

  CHECK(slurp(base / "one" / "bands.csv") == slurp(base / "two" / "bands.csv"));
  CHECK(slurp(base / "one" / "bands.json") == slurp(base / "two" / "bands.json"));
  CHECK(slurp(base / "one" / "bands.json") == r1.summary_json);

  const nlohmann::json j = nlohmann::json::parse(r1.summary_json);
  CHECK(j["meta"]["mode"] == "bands");
  CHECK(j["meta"]["seed"] == 7);
  CHECK(j["standard_bands"].size() == 1);
  const double alpha = j["standard_bands"][0]["alpha"].get<double>();
  CHECK(std::abs(alpha + 2.0) <= 1e-8);

  fs::remove_all(base);
}

TEST_CASE("verify mode flags a broken budget through exit code 4") {
  const RunConfig cfg = parse_config(
      "mode = verify\n"
      "jacobi = 1; 1.0; 0.0\n"
      "energies = 1.0, 5.0\n"
      "a_budget = 0.1\n");
  const fs::path base = fs::temp_directory_path() / "bandprufer_test_verify";
  fs::remove_all(base);
  fs::create_directories(base);

  const RunOutput out = execute_run(cfg, base.string(), 1, 0);
  CHECK(out.exit_code == 4);
  const nlohmann::json j = nlohmann::json::parse(out.summary_json);
  CHECK(j["overall_pass"] == false);
  CHECK(j["a_budget"].get<double>() == 0.1);
  REQUIRE(j.contains("outside_spectrum"));
  CHECK(j["outside_spectrum"][0].get<double>() == 5.0);
  REQUIRE(j["theorem_bounds"].size() == 1);
  CHECK(j["theorem_bounds"][0]["above_pass"] == false);

  fs::remove_all(base);
}

TEST_CASE("explicit energy lists without any budget are rejected at run time") {
  const RunConfig cfg = parse_config(
      "mode = verify\n"
      "jacobi = 1; 1.0; 0.0\n"
      "energies = 1.0\n");
  const fs::path base = fs::temp_directory_path() / "bandprufer_test_verify2";
  fs::remove_all(base);
  fs::create_directories(base);
  bool threw = false;
  try {
    static_cast<void>(execute_run(cfg, base.string(), 1, 0));
  } catch (const ConfigError& e) {
    threw = true;
    CHECK(e.key() == "a_budget");
  }
  CHECK(threw);
  fs::remove_all(base);
}
