#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mplab/csv.hpp"
#include "mplab/error.hpp"
#include "mplab/harness.hpp"

using namespace mplab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mplab_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ExperimentConfig widths_config(int trials, const fs::path& out) {
  auto cfg = ExperimentConfig::from_json(json{
      {"experiment", "widths"},
      {"trials", trials},
      {"master_seed", 11},
      {"grids", {{"families", json::array({{{"family", "L1Ball"}}})}, {"n", {8, 32}}, {"draws", 200}}}});
  cfg.output_dir = out.string();
  return cfg;
}

const CriterionStatus& criterion(const SummaryReport& r, int id) {
  for (const auto& c : r.criteria)
    if (c.id == id) return c;
  throw std::runtime_error("criterion missing");
}

}  // namespace

TEST_CASE("zero trials: header-only CSV and a valid manifest") {
  const auto dir = scratch("zero");
  const auto m = run(widths_config(0, dir));
  const auto t = csv::read(dir / "widths.csv");
  CHECK(t.rows.empty());
  CHECK(t.column("mean") >= 0);
  CHECK(m.seed_ledger.empty());
  CHECK(m.failed_cells.empty());
  const auto back = ExperimentManifest::from_json(json::parse(slurp(dir / "manifest.json")));
  CHECK(back.config_hash == m.config_hash);
  CHECK(back.cells.size() == 2);
  CHECK(summarize(dir).criteria.size() == 11);
  fs::remove_all(dir);
}

TEST_CASE("rows are cells x trials in (cell, trial) order") {
  const auto dir = scratch("grid");
  const auto m = run(widths_config(3, dir));
  const auto t = csv::read(dir / "widths.csv");
  REQUIRE(t.rows.size() == 6);
  const int c = t.column("cell"), k = t.column("trial"), n = t.column("n");
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(t.rows[i][c] == std::to_string(i / 3));
    CHECK(t.rows[i][k] == std::to_string(i % 3));
    CHECK(t.rows[i][n] == (i < 3 ? "8" : "32"));
  }
  CHECK(m.seed_ledger.size() == 6);
  fs::remove_all(dir);
}

TEST_CASE("same config twice: identical hashes and files, any worker count") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto ma = run(widths_config(2, a), 1);
  const auto mb = run(widths_config(2, b), 3);
  CHECK(ma.config_hash == mb.config_hash);
  CHECK(ma.files == mb.files);
  CHECK(slurp(a / "widths.csv") == slurp(b / "widths.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("single row: aggregate mean equals the value") {
  const auto dir = scratch("single");
  auto cfg = widths_config(1, dir);
  cfg.grids["n"] = {16};
  run(cfg);
  const auto t = csv::read(dir / "widths.csv");
  REQUIRE(t.rows.size() == 1);
  const double value = std::stod(t.rows[0][t.column("mean")]);
  const auto report = summarize(dir);
  bool found = false;
  for (const auto& e : report.cells)
    if (e.at("file") == "widths.csv") {
      CHECK(e.at("stats").at("mean").at("mean").get<double>() == value);
      CHECK(e.at("stats").at("mean").at("std_error").get<double>() == 0.0);
      CHECK(e.at("labels").at("family") == "L1Ball");
      found = true;
    }
  CHECK(found);
  fs::remove_all(dir);
}

TEST_CASE("corrupted result file raises an integrity error naming it") {
  const auto dir = scratch("corrupt");
  run(widths_config(1, dir));
  {
    std::fstream f(dir / "widths.csv", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-3, std::ios::end);
    f.put('7');
  }
  try {
    summarize(dir);
    FAIL("no error");
  } catch (const IntegrityError& e) {
    CHECK(std::string(e.what()).find("widths.csv") != std::string::npos);
  }
  CHECK_THROWS_AS(summarize(dir / "missing"), IntegrityError);
  fs::remove_all(dir);
}

TEST_CASE("failing cells are recorded while the others complete") {
  const auto dir = scratch("failed");
  auto cfg = ExperimentConfig::from_json(json::parse(R"({
    "experiment": "multiplier", "trials": 2, "master_seed": 3,
    "grids": {"n": [4], "N": [20], "u": [2],
              "index_sets": [{"family": "L1Ball"},
                             {"family": "PermutationPolytope", "weights": [0, 0, 0, 0]}],
              "width_draws": 200}})"));
  cfg.output_dir = dir.string();
  const auto m = run(cfg);
  REQUIRE(m.failed_cells.size() == 1);
  CHECK(m.failed_cells[0].cell == 1);
  CHECK(m.failed_cells[0].message.find("degenerate") != std::string::npos);
  CHECK(csv::read(dir / "multiplier.csv").rows.size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("recovery summary fits the error slope over three sample sizes") {
  const auto dir = scratch("recovery");
  auto cfg = ExperimentConfig::from_json(json::parse(R"({
    "experiment": "recovery", "trials": 4, "master_seed": 5,
    "grids": {"n": [32], "s": [2], "N": [64, 128, 256], "run_basis_pursuit": false}})"));
  cfg.output_dir = dir.string();
  run(cfg);
  const auto t = csv::read(dir / "recovery.csv");
  CHECK(t.rows.size() == 3);
  const auto report = summarize(dir);
  const auto& c7 = criterion(report, 7);
  CHECK(c7.detail.find("slope") != std::string::npos);
  // s = 8 is missing, so the s-ratio half of the check cannot be decided
  CHECK(c7.detail.find("no s = 2 / s = 8 pair") != std::string::npos);
  CHECK(criterion(report, 8).state == CriterionState::kInsufficientData);
  fs::remove_all(dir);
}
