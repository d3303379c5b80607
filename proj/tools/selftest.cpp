#include "selftest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mplab/config.hpp"
#include "mplab/csv.hpp"
#include "mplab/geometry.hpp"
#include "mplab/harness.hpp"
#include "mplab/process.hpp"

namespace mplab::tools {

namespace {

// max over signed permutations of w of <v, z>
double permutation_brute_force(std::vector<double> w, const std::vector<double>& z) {
  std::sort(w.begin(), w.end());
  double best = 0.0;
  do {
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) s += w[j] * std::abs(z[j]);
    best = std::max(best, s);
  } while (std::next_permutation(w.begin(), w.end()));
  return best;
}

double sparse_brute_force(const std::vector<double>& z, int s, double r) {
  const int n = static_cast<int>(z.size());
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != s) continue;
    double sq = 0.0;
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) sq += z[static_cast<std::size_t>(j)] * z[static_cast<std::size_t>(j)];
    best = std::max(best, r * std::sqrt(sq));
  }
  return best;
}

bool close(double a, double b, double rel = 1e-9) {
  return std::abs(a - b) <= rel * std::max(1.0, std::abs(b));
}

bool support_matches_enumeration() {
  Rng rng(SeedPath{7, 0, 0}.key(StreamTag::kProperty));
  const int n = 5;
  const std::vector<double> w = {1.0, 0.8, 0.5, 0.2, 0.1};
  for (int t = 0; t < 200; ++t) {
    std::vector<double> z(n);
    for (auto& v : z) v = rng.normal();
    double max_abs = 0.0, norm = 0.0;
    for (double v : z) {
      max_abs = std::max(max_abs, std::abs(v));
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (!close(support(IndexSetSpec::l1_ball(n, 2.0), z), 2.0 * max_abs)) return false;
    if (!close(support(IndexSetSpec::l2_ball(n, 0.5), z), 0.5 * norm)) return false;
    if (!close(support(IndexSetSpec::sparse_cap(n, 2, 1.5), z), sparse_brute_force(z, 2, 1.5)))
      return false;
    if (!close(support(IndexSetSpec::permutation_polytope(w), z), permutation_brute_force(w, z)))
      return false;
    // L1 cap L2 sits between its two limits and reaches each of them.
    const double mid = support(IndexSetSpec::l1_cap_l2(n, 1.0, 0.7), z);
    if (mid > std::min(max_abs, 0.7 * norm) + 1e-12) return false;
    if (!close(support(IndexSetSpec::l1_cap_l2(n, 1.0, 5.0), z), max_abs)) return false;
    if (!close(support(IndexSetSpec::l1_cap_l2(n, 10.0, 1.0), z), norm)) return false;
  }
  return true;
}

bool sets_are_unconditional() {
  const int n = 8;
  std::vector<double> w(n);
  std::iota(w.begin(), w.end(), 1.0);
  for (const auto& set : {IndexSetSpec::l1_ball(n), IndexSetSpec::l2_ball(n),
                          IndexSetSpec::sparse_cap(n, 3), IndexSetSpec::l1_cap_l2(n, 1.0, 0.5),
                          IndexSetSpec::permutation_polytope(w)})
    if (!unconditionality_check(set, 200, {11, 0, 0}).passed()) return false;
  return true;
}

bool serial_equals_parallel() {
  const auto dist = DistributionSpec::make(CoordinateFamily::kStudentT, 5.0, 40);
  const auto noise = NoiseSpec::make(NoiseFamily::kSymmetricPareto, 3.0, 1.0);
  const SeedPath path{3, 1, 2};
  const auto a = sample_batch(dist, noise, 300, path, BatchRole::kPrimary, ExecPolicy::kSerial);
  const auto b = sample_batch(dist, noise, 300, path, BatchRole::kPrimary, ExecPolicy::kParallel);
  if (a.x != b.x || a.xi != b.xi || a.eps != b.eps) return false;
  const auto set = IndexSetSpec::l1_ball(40);
  const auto wa = gaussian_mean_width(set, 3000, std::nullopt, path, ExecPolicy::kSerial);
  const auto wb = gaussian_mean_width(set, 3000, std::nullopt, path, ExecPolicy::kParallel);
  if (wa.mean != wb.mean || wa.std_error != wb.std_error) return false;
  const Eigen::VectorXd w = a.xi.cwiseProduct(a.eps);
  return weighted_column_sums(a.x, w, ExecPolicy::kSerial) ==
         weighted_column_sums(a.x, w, ExecPolicy::kParallel);
}

bool config_hash_stable() {
  const json a = json::parse(
      R"({"experiment":"widths","trials":2,"master_seed":5,"grids":{"n":[4,8],"draws":100}})");
  const json b = json::parse(
      R"({"grids":{"draws":100,"n":[4,8]},"master_seed":5,"trials":2,"experiment":"widths"})");
  const auto ca = ExperimentConfig::from_json(a);
  const auto cb = ExperimentConfig::from_json(b);
  const auto round = ExperimentConfig::from_json(ca.to_json());
  return ca.content_hash() == cb.content_hash() && round.to_json() == ca.to_json();
}

bool csv_round_trip() {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform() * 40 - 20);
    if (std::stod(csv::format_double(v)) != v) return false;
  }
  return true;
}

bool runs_are_byte_identical() {
  const auto base = std::filesystem::temp_directory_path() / "mplab_selftest";
  auto cfg = ExperimentConfig::from_json(json::parse(R"({
    "experiment": "multiplier", "trials": 6, "master_seed": 42,
    "grids": {"n": [16, 32], "noises": [{"family": "StudentT", "q0": 3}], "width_draws": 500}
  })"));
  cfg.output_dir = (base / "w1").string();
  const auto m1 = run(cfg, 1);
  cfg.output_dir = (base / "w3").string();
  const auto m3 = run(cfg, 3);
  std::filesystem::remove_all(base);
  return m1.files == m3.files && m1.failed_cells.empty();
}

}  // namespace

int selftest(std::ostream& os) {
  const std::vector<std::pair<const char*, std::function<bool()>>> checks = {
      {"support functions match enumeration", support_matches_enumeration},
      {"index sets are 1-unconditional", sets_are_unconditional},
      {"serial and parallel kernels agree bit for bit", serial_equals_parallel},
      {"config hash ignores key order, config round-trips", config_hash_stable},
      {"CSV numbers round-trip", csv_round_trip},
      {"runs at 1 and 3 workers write identical CSVs", runs_are_byte_identical},
  };
  int failures = 0;
  for (const auto& [name, check] : checks) {
    bool ok = false;
    std::string error;
    try {
      ok = check();
    } catch (const std::exception& e) {
      error = e.what();
    }
    os << (ok ? "PASS  " : "FAIL  ") << name << (error.empty() ? "" : " (" + error + ")") << '\n';
    failures += ok ? 0 : 1;
  }
  return failures;
}

}  // namespace mplab::tools
