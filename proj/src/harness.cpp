#include "mplab/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "mplab/csv.hpp"
#include "mplab/error.hpp"
#include "mplab/gelfand.hpp"
#include "mplab/parallel.hpp"
#include "mplab/process.hpp"
#include "mplab/recovery.hpp"
#include "mplab/stats.hpp"

namespace mplab {

namespace {

using Row = std::vector<std::string>;
using csv::format_bool;
using csv::format_double;

// Per-cell quantities (widths, fixed points) are seeded at these trial
// indices so they never collide with a real trial.
constexpr std::uint64_t kCellTrial = std::numeric_limits<std::uint64_t>::max();
constexpr std::uint64_t kCellTrialAlt = std::numeric_limits<std::uint64_t>::max() - 1;

std::string fmt(int v) { return std::to_string(v); }
std::string fmt(double v) { return format_double(v); }

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json as_list(const json& grids, const char* key, const json& fallback) {
  json v = grids.contains(key) ? grids.at(key) : fallback;
  if (!v.is_array()) v = json::array({v});
  if (v.empty()) throw ConfigError(std::string("grid '") + key + "' is empty");
  return v;
}

std::vector<int> int_list(const json& grids, const char* key, const json& fallback, int min_value) {
  std::vector<int> out;
  for (const auto& v : as_list(grids, key, fallback)) {
    if (!v.is_number_integer() || v.get<long long>() < min_value)
      throw ConfigError(std::string("grid '") + key + "' needs integers >= " + fmt(min_value));
    out.push_back(v.get<int>());
  }
  return out;
}

std::vector<double> double_list(const json& grids, const char* key, const json& fallback) {
  std::vector<double> out;
  for (const auto& v : as_list(grids, key, fallback)) {
    if (!v.is_number()) throw ConfigError(std::string("grid '") + key + "' needs numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

template <class T>
T scalar(const json& grids, const char* key, T fallback) {
  if (!grids.contains(key)) return fallback;
  try {
    return grids.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("grid '") + key + "' has the wrong type");
  }
}

int positive(const json& grids, const char* key, int fallback) {
  const int v = scalar(grids, key, fallback);
  if (v < 1) throw ConfigError(std::string("'") + key + "' must be >= 1");
  return v;
}

struct TaskOutcome {
  std::vector<Row> rows;
  std::string error;
};

// Runs every (cell, trial) task on the worker pool. Outcomes are stored by
// task index, so merging them in index order is independent of scheduling.
template <class Fn>
std::vector<TaskOutcome> run_tasks(int cells, int trials, Fn&& fn) {
  std::vector<TaskOutcome> out(static_cast<std::size_t>(cells) * static_cast<std::size_t>(trials));
  for_each_index(out.size(), ExecPolicy::kParallel, [&](std::size_t k) {
    const int cell = static_cast<int>(k / static_cast<std::size_t>(trials));
    const int trial = static_cast<int>(k % static_cast<std::size_t>(trials));
    try {
      out[k].rows = fn(cell, trial);
    } catch (const std::exception& e) {
      out[k].error = e.what();
    }
  });
  return out;
}

// Per-cell setup work, parallel over cells.
template <class T, class Fn>
std::vector<std::optional<T>> run_cells(int cells, std::vector<std::string>& errors, Fn&& fn) {
  std::vector<std::optional<T>> out(static_cast<std::size_t>(cells));
  errors.assign(static_cast<std::size_t>(cells), {});
  for_each_index(out.size(), ExecPolicy::kParallel, [&](std::size_t c) {
    try {
      out[c] = fn(static_cast<int>(c));
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  });
  return out;
}

struct Output {
  std::vector<std::pair<std::string, csv::Table>> tables;
  std::vector<FailedCell> failed;
  std::vector<SeedLedgerEntry> ledger;
  json cells = json::array();
};

void collect(Output& out, csv::Table& table, const std::vector<TaskOutcome>& outcomes, int trials,
             const std::vector<std::string>& cell_errors = {}) {
  std::map<int, std::string> failed;
  for (std::size_t c = 0; c < cell_errors.size(); ++c)
    if (!cell_errors[c].empty()) failed.emplace(static_cast<int>(c), cell_errors[c]);
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const int cell = static_cast<int>(k / static_cast<std::size_t>(trials));
    const int trial = static_cast<int>(k % static_cast<std::size_t>(trials));
    out.ledger.push_back({cell, trial});
    if (!outcomes[k].error.empty()) {
      failed.emplace(cell, "trial " + fmt(trial) + ": " + outcomes[k].error);
      continue;
    }
    for (const auto& row : outcomes[k].rows) table.rows.push_back(row);
  }
  for (auto& [cell, msg] : failed) out.failed.push_back({cell, msg});
}

// ---- widths -----------------------------------------------------------------

Output run_widths(const ExperimentConfig& cfg) {
  const json& g = cfg.grids;
  struct Cell {
    IndexSetSpec set;
    int n;
    std::optional<double> r;
  };
  const int draws = positive(g, "draws", 10000);
  std::vector<Cell> cells;
  Output out;
  for (const auto& fam : as_list(g, "families", json::array({{{"family", "L1Ball"}}})))
    for (int n : int_list(g, "n", json::array({64}), 1))
      for (const auto& r : as_list(g, "r", json::array({nullptr}))) {
        Cell c{index_set_from_json(fam, n), n, std::nullopt};
        if (!r.is_null()) {
          if (!r.is_number() || r.get<double>() <= 0.0) throw ConfigError("grid 'r' needs r > 0");
          c.r = r.get<double>();
          (void)c.set.localized(*c.r);
        }
        out.cells.push_back({{"set", to_json(c.set)}, {"r", r}});
        cells.push_back(std::move(c));
      }

  csv::Table table{{"cell", "trial", "family", "n", "r", "mean", "stderr", "draws", "d2", "D"}, {}};
  const auto outcomes = run_tasks(static_cast<int>(cells.size()), cfg.trials, [&](int ci, int t) {
    const Cell& c = cells[static_cast<std::size_t>(ci)];
    const auto w = gaussian_mean_width(c.set, draws, c.r,
                                       {cfg.master_seed, static_cast<std::uint64_t>(ci),
                                        static_cast<std::uint64_t>(t)},
                                       ExecPolicy::kSerial);
    return std::vector<Row>{{fmt(ci), fmt(t), std::string(to_string(c.set.family())), fmt(c.n),
                             c.r ? fmt(*c.r) : "", fmt(w.mean), fmt(w.std_error), fmt(w.draws),
                             fmt(w.d2), fmt(w.complexity_ratio)}};
  });
  collect(out, table, outcomes, cfg.trials);
  out.tables.emplace_back("widths.csv", std::move(table));
  return out;
}

// ---- multiplier -------------------------------------------------------------

Output run_multiplier(const ExperimentConfig& cfg) {
  const json& g = cfg.grids;
  struct Cell {
    int n;
    int sample_count;
    DistributionSpec dist;
    NoiseSpec noise;
    IndexSetSpec set;
  };
  const int width_draws = positive(g, "width_draws", 20000);
  const std::vector<double> u_grid = double_list(g, "u", json::array({2, 4, 8}));
  for (double u : u_grid)
    if (u < 2.0) throw ConfigError("grid 'u' needs u >= 2");
  std::vector<Cell> cells;
  Output out;
  for (int n : int_list(g, "n", json::array({64}), 1))
    for (const auto& nn : as_list(g, "N", json::array({"n"}))) {
      int sample_count = 0;
      if (nn == "n") {
        sample_count = n;
      } else if (nn.is_number_integer() && nn.get<long long>() >= 1) {
        sample_count = nn.get<int>();
      } else {
        throw ConfigError("grid 'N' needs positive integers or \"n\"");
      }
      for (const auto& dj : as_list(g, "distributions", json::array({{{"family", "Gaussian"}}})))
        for (const auto& nj :
             as_list(g, "noises", json::array({{{"family", "Gaussian"}, {"q0", 3}}})))
          for (const auto& sj : as_list(g, "index_sets", json::array({{{"family", "L1Ball"}}}))) {
            Cell c{n, sample_count, distribution_from_json(dj, n), noise_from_json(nj),
                   index_set_from_json(sj, n)};
            if (c.noise.q0() <= 2.0) throw ConfigError("multiplier noise needs q0 > 2");
            out.cells.push_back({{"n", n},
                                 {"N", sample_count},
                                 {"distribution", to_json(c.dist)},
                                 {"noise", to_json(c.noise)},
                                 {"set", to_json(c.set)}});
            cells.push_back(std::move(c));
          }
    }
  const int n_cells = static_cast<int>(cells.size());

  std::vector<std::string> cell_errors;
  const auto widths = run_cells<WidthEstimate>(n_cells, cell_errors, [&](int ci) {
    return gaussian_mean_width(cells[static_cast<std::size_t>(ci)].set, width_draws, std::nullopt,
                               {cfg.master_seed, static_cast<std::uint64_t>(ci), kCellTrial},
                               ExecPolicy::kSerial);
  });

  csv::Table widths_table{{"cell", "family", "n", "r", "mean", "stderr", "draws", "d2", "D"}, {}};
  for (int ci = 0; ci < n_cells; ++ci) {
    const auto& w = widths[static_cast<std::size_t>(ci)];
    if (!w) continue;
    const Cell& c = cells[static_cast<std::size_t>(ci)];
    widths_table.rows.push_back({fmt(ci), std::string(to_string(c.set.family())), fmt(c.n), "",
                                 fmt(w->mean), fmt(w->std_error), fmt(w->draws), fmt(w->d2),
                                 fmt(w->complexity_ratio)});
  }

  std::vector<std::string> u_text;
  for (double u : u_grid) u_text.push_back(fmt(u));
  csv::Table table{{"cell", "trial", "n", "N", "dist_family", "nu", "noise_family", "q0",
                    "set_family", "u", "A_u", "sup_centred", "sup_symmetrized", "C_hat", "ratio",
                    "centring"},
                   {}};
  const auto outcomes = run_tasks(n_cells, cfg.trials, [&](int ci, int t) {
    const auto& w = widths[static_cast<std::size_t>(ci)];
    if (!w) throw std::runtime_error("width estimate unavailable");
    const Cell& c = cells[static_cast<std::size_t>(ci)];
    const SampleBatch batch =
        sample_batch(c.dist, c.noise, c.sample_count,
                     {cfg.master_seed, static_cast<std::uint64_t>(ci), static_cast<std::uint64_t>(t)},
                     BatchRole::kPrimary, ExecPolicy::kSerial);
    const ProcessStats s = multiplier_stats(batch, c.set, u_grid, ExecPolicy::kSerial);
    std::vector<std::string> flags;
    for (bool f : s.a_u_holds) flags.push_back(format_bool(f));
    return std::vector<Row>{{fmt(ci), fmt(t), fmt(c.n), fmt(c.sample_count),
                             std::string(to_string(c.dist.family())), fmt(c.dist.tail_param()),
                             std::string(to_string(c.noise.family())), fmt(c.noise.q0()),
                             std::string(to_string(c.set.family())), csv::join(u_text),
                             csv::join(flags), fmt(s.sup_centred), fmt(s.sup_symmetrized),
                             fmt(s.envelope_constant), fmt(ratio_statistic(s, *w, c.noise)),
                             s.centring == Centring::kHoldout ? "holdout" : "symmetric"}};
  });
  collect(out, table, outcomes, cfg.trials, cell_errors);
  out.tables.emplace_back("multiplier.csv", std::move(table));
  out.tables.emplace_back("multiplier_widths.csv", std::move(widths_table));
  return out;
}

// ---- recovery ---------------------------------------------------------------

Output run_recovery(const ExperimentConfig& cfg) {
  const json& g = cfg.grids;
  std::vector<RecoveryCell> cells;
  Output out;
  const double lasso_tol = scalar(g, "lasso_tol", 1e-8);
  const int lasso_sweeps = positive(g, "lasso_max_sweeps", 5000);
  const double bp_tol = scalar(g, "bp_tol", 1e-8);
  const int bp_iters = positive(g, "bp_max_iters", 20000);
  const bool run_bp = scalar(g, "run_basis_pursuit", true);
  const bool run_lasso = scalar(g, "run_lasso", true);
  if (!(lasso_tol > 0.0) || !(bp_tol > 0.0)) throw ConfigError("solver tolerances must be > 0");
  for (int n : int_list(g, "n", json::array({128}), 1))
    for (int s : int_list(g, "s", json::array({4}), 1))
      for (int sample_count : int_list(g, "N", json::array({256}), 1))
        for (const auto& dj : as_list(g, "distributions", json::array({{{"family", "Gaussian"}}})))
          for (const auto& nj : as_list(g, "noises", json::array({{{"family", "Gaussian"}}})))
            for (double c1 : double_list(g, "c1", json::array({1.0}))) {
              if (s > n) throw ConfigError("recovery needs s <= n");
              RecoveryCell c;
              c.dim = n;
              c.sparsity = s;
              c.sample_count = sample_count;
              c.dist = distribution_from_json(dj, n);
              c.noise = noise_from_json(nj);
              c.c1 = c1;
              c.lasso_tol = lasso_tol;
              c.lasso_max_sweeps = lasso_sweeps;
              c.bp_tol = bp_tol;
              c.bp_max_iters = bp_iters;
              c.run_basis_pursuit = run_bp;
              c.run_lasso = run_lasso;
              out.cells.push_back({{"n", n},
                                   {"s", s},
                                   {"N", sample_count},
                                   {"distribution", to_json(c.dist)},
                                   {"noise", to_json(c.noise)},
                                   {"c1", c1}});
              cells.push_back(std::move(c));
            }
  const int n_cells = static_cast<int>(cells.size());

  std::vector<std::vector<std::optional<RecoveryTrial>>> trials(
      cells.size(), std::vector<std::optional<RecoveryTrial>>(static_cast<std::size_t>(cfg.trials)));
  csv::Table table{{"cell", "trial", "n", "s", "N", "family", "nu", "noise_family", "q0", "c1",
                    "lambda", "bp_success", "bp_converged", "bp_err_l2", "lasso_err_l1",
                    "lasso_err_l2", "lasso_converged"},
                   {}};
  const auto outcomes = run_tasks(n_cells, cfg.trials, [&](int ci, int t) {
    const RecoveryCell& c = cells[static_cast<std::size_t>(ci)];
    const RecoveryTrial r = run_recovery_trial(
        c, {cfg.master_seed, static_cast<std::uint64_t>(ci), static_cast<std::uint64_t>(t)});
    trials[static_cast<std::size_t>(ci)][static_cast<std::size_t>(t)] = r;
    return std::vector<Row>{{fmt(ci), fmt(t), fmt(c.dim), fmt(c.sparsity), fmt(c.sample_count),
                             std::string(to_string(c.dist.family())), fmt(c.dist.tail_param()),
                             std::string(to_string(c.noise.family())), fmt(c.noise.q0()),
                             fmt(c.c1), fmt(r.lambda), format_bool(r.bp_success),
                             format_bool(r.bp_converged), fmt(r.bp_error_l2),
                             fmt(r.lasso_error_l1), fmt(r.lasso_error_l2),
                             format_bool(r.lasso_converged)}};
  });
  collect(out, table, outcomes, cfg.trials);

  csv::Table summary{{"cell", "n", "s", "N", "family", "nu", "noise_family", "q0", "c1", "lambda",
                      "success_rate", "success_se", "err_l1_med", "err_l2_med", "trials",
                      "unconverged", "rate_log_en", "rate_log_en_over_s"},
                     {}};
  for (int ci = 0; ci < n_cells; ++ci) {
    std::vector<RecoveryTrial> done;
    for (const auto& t : trials[static_cast<std::size_t>(ci)])
      if (t) done.push_back(*t);
    if (done.empty()) continue;
    const RecoveryCell& c = cells[static_cast<std::size_t>(ci)];
    const RecoveryCellSummary s = summarize_recovery(c, done);
    const double n = c.dim, k = c.sparsity, m = c.sample_count;
    summary.rows.push_back({fmt(ci), fmt(c.dim), fmt(c.sparsity), fmt(c.sample_count),
                            std::string(to_string(c.dist.family())), fmt(c.dist.tail_param()),
                            std::string(to_string(c.noise.family())), fmt(c.noise.q0()),
                            fmt(c.c1), fmt(s.lambda), fmt(s.success_rate), fmt(s.success_se),
                            fmt(s.err_l1_median), fmt(s.err_l2_median), fmt(s.trials),
                            fmt(s.unconverged), fmt(std::sqrt(k * std::log(std::exp(1.0) * n) / m)),
                            fmt(std::sqrt(k * std::log(std::exp(1.0) * n / k) / m))});
  }
  out.tables.emplace_back("recovery_trials.csv", std::move(table));
  out.tables.emplace_back("recovery.csv", std::move(summary));
  return out;
}

// ---- gelfand ----------------------------------------------------------------

Output run_gelfand(const ExperimentConfig& cfg) {
  const json& g = cfg.grids;
  struct Cell {
    int n;
    int m;
    DistributionSpec dist;
    IndexSetSpec set;
    double gamma;
  };
  const int draws = positive(g, "draws", 2000);
  const int probes = positive(g, "probes", 1000);
  const double tol = scalar(g, "tol", 1e-3);
  if (!(tol > 0.0)) throw ConfigError("'tol' must be > 0");
  std::vector<Cell> cells;
  Output out;
  for (int n : int_list(g, "n", json::array({128}), 1))
    for (int m : int_list(g, "m", json::array({60}), 1))
      for (const auto& dj : as_list(g, "distributions", json::array({{{"family", "Gaussian"}}})))
        for (const auto& sj : as_list(g, "index_sets", json::array({{{"family", "L1Ball"}}})))
          for (double gamma : double_list(g, "gamma", json::array({0.5}))) {
            if (m >= n) throw ConfigError("gelfand needs m < n");
            if (!(gamma > 0.0)) throw ConfigError("grid 'gamma' needs gamma > 0");
            Cell c{n, m, distribution_from_json(dj, n), index_set_from_json(sj, n), gamma};
            (void)c.set.localized(c.set.d2());
            out.cells.push_back({{"n", n},
                                 {"m", m},
                                 {"distribution", to_json(c.dist)},
                                 {"set", to_json(c.set)},
                                 {"gamma", gamma}});
            cells.push_back(std::move(c));
          }
  const int n_cells = static_cast<int>(cells.size());

  std::vector<std::string> cell_errors;
  using Pair = std::pair<FixedPointResult, FixedPointResult>;
  const auto fixed = run_cells<Pair>(n_cells, cell_errors, [&](int ci) {
    const Cell& c = cells[static_cast<std::size_t>(ci)];
    const auto cell = static_cast<std::uint64_t>(ci);
    return Pair{r_g_fixed_point(c.set, c.gamma, c.m, tol, draws, {cfg.master_seed, cell, kCellTrial},
                                ExecPolicy::kSerial),
                r_x_fixed_point(c.dist, c.set, c.gamma, c.m, tol, draws,
                                {cfg.master_seed, cell, kCellTrialAlt}, ExecPolicy::kSerial)};
  });

  csv::Table table{{"cell", "trial", "n", "m", "family", "nu", "set_family", "gamma", "r_G",
                    "r_G_lo", "r_G_hi", "r_X", "r_X_lo", "r_X_hi", "diam_lb", "kernel_dim",
                    "rank_deficient", "confident_G", "confident_X"},
                   {}};
  const auto outcomes = run_tasks(n_cells, cfg.trials, [&](int ci, int t) {
    const auto& fp = fixed[static_cast<std::size_t>(ci)];
    if (!fp) throw std::runtime_error("fixed points unavailable");
    const Cell& c = cells[static_cast<std::size_t>(ci)];
    const KernelSection k = kernel_section_diameter(
        c.dist, c.set, c.m, probes,
        {cfg.master_seed, static_cast<std::uint64_t>(ci), static_cast<std::uint64_t>(t)});
    const auto& [rg, rx] = *fp;
    return std::vector<Row>{{fmt(ci), fmt(t), fmt(c.n), fmt(c.m),
                             std::string(to_string(c.dist.family())), fmt(c.dist.tail_param()),
                             std::string(to_string(c.set.family())), fmt(c.gamma), fmt(rg.r_star),
                             fmt(rg.r_band_lo), fmt(rg.r_band_hi), fmt(rx.r_star),
                             fmt(rx.r_band_lo), fmt(rx.r_band_hi), fmt(k.lower_bound),
                             fmt(k.kernel_dim), format_bool(k.rank_deficient),
                             format_bool(rg.confident), format_bool(rx.confident)}};
  });
  collect(out, table, outcomes, cfg.trials, cell_errors);
  out.tables.emplace_back("gelfand.csv", std::move(table));
  return out;
}

// ---- moments ----------------------------------------------------------------

Output run_moments(const ExperimentConfig& cfg) {
  const json& g = cfg.grids;
  struct Cell {
    int n;
    int p;
    DistributionSpec dist;
  };
  const int samples = positive(g, "samples", 100000);
  const double kappa = scalar(g, "kappa", 0.5);
  const int n_dirs = positive(g, "n_dirs", 100);
  const int sb_dim = positive(g, "small_ball_dim", 16);
  const int sb_samples = positive(g, "small_ball_samples", 2000);
  if (samples < 2) throw ConfigError("'samples' must be >= 2");
  if (!(kappa >= 0.0)) throw ConfigError("'kappa' must be >= 0");
  std::vector<Cell> cells;
  Output out;
  for (const auto& dj : as_list(g, "distributions", json::array({{{"family", "Gaussian"}}})))
    for (int n : int_list(g, "n", json::array({1024}), 1))
      for (int p : int_list(g, "p", json::array({8}), 2)) {
        Cell c{n, p, distribution_from_json(dj, n)};
        out.cells.push_back({{"n", n}, {"p", p}, {"distribution", to_json(c.dist)}});
        cells.push_back(std::move(c));
      }

  csv::Table table{{"cell", "trial", "family", "nu", "n", "p", "q_cap", "p_norm", "q_star",
                    "ratios", "kappa", "small_ball_dim", "small_ball_freq"},
                   {}};
  const auto outcomes = run_tasks(static_cast<int>(cells.size()), cfg.trials, [&](int ci, int t) {
    const Cell& c = cells[static_cast<std::size_t>(ci)];
    const SeedPath path{cfg.master_seed, static_cast<std::uint64_t>(ci),
                        static_cast<std::uint64_t>(t)};
    const auto profile = moment_growth_profile(c.dist, c.p, samples, path);
    double best = 0.0;
    int q_star = 1;
    std::vector<std::string> ratios;
    for (const auto& r : profile) {
      ratios.push_back(fmt(r.ratio));
      if (r.ratio > best) {
        best = r.ratio;
        q_star = r.q;
      }
    }
    const double freq = small_ball_estimate(c.dist.with_dim(sb_dim), kappa, n_dirs, sb_samples,
                                            path, {}, ExecPolicy::kSerial);
    return std::vector<Row>{{fmt(ci), fmt(t), std::string(to_string(c.dist.family())),
                             fmt(c.dist.tail_param()), fmt(c.n), fmt(c.p),
                             fmt(static_cast<int>(profile.size())), fmt(best), fmt(q_star),
                             csv::join(ratios), fmt(kappa), fmt(sb_dim), fmt(freq)}};
  });
  collect(out, table, outcomes, cfg.trials);
  out.tables.emplace_back("moments.csv", std::move(table));
  return out;
}

// ---- summarize --------------------------------------------------------------

std::optional<double> parse_number(const std::string& text) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

double number(const csv::Table& t, const Row& row, const char* col) {
  const int c = t.column(col);
  if (c < 0) throw IntegrityError(std::string("missing column '") + col + "'");
  const auto v = parse_number(row[static_cast<std::size_t>(c)]);
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

std::string text(const csv::Table& t, const Row& row, const char* col) {
  const int c = t.column(col);
  if (c < 0) throw IntegrityError(std::string("missing column '") + col + "'");
  return row[static_cast<std::size_t>(c)];
}

json aggregate(const std::string& file, const csv::Table& t) {
  json out = json::array();
  const int cell_col = t.column("cell");
  if (cell_col < 0) return out;
  std::map<long, std::vector<const Row*>> by_cell;
  for (const auto& row : t.rows) {
    const auto c = parse_number(row[static_cast<std::size_t>(cell_col)]);
    if (!c) throw IntegrityError(file + ": bad cell index");
    by_cell[static_cast<long>(*c)].push_back(&row);
  }
  for (const auto& [cell, rows] : by_cell) {
    json entry = {{"file", file}, {"cell", cell}, {"rows", rows.size()}};
    json labels = json::object();
    json columns = json::object();
    for (std::size_t k = 0; k < t.header.size(); ++k) {
      const std::string& name = t.header[k];
      if (name == "cell" || name == "trial") continue;
      std::vector<double> values;
      bool numeric = true;
      for (const Row* r : rows) {
        const auto v = parse_number((*r)[k]);
        if (!v) {
          numeric = false;
          break;
        }
        if (!std::isnan(*v)) values.push_back(*v);
      }
      if (!numeric) {
        labels[name] = rows.front()->at(k);
        continue;
      }
      if (values.empty()) {
        columns[name] = {{"count", 0}};
        continue;
      }
      const auto ms = stats::mean_se(values);
      columns[name] = {{"count", values.size()},
                       {"mean", ms.mean},
                       {"std_error", ms.std_error},
                       {"median", stats::median(values)},
                       {"q05", stats::quantile(values, 0.05)},
                       {"q95", stats::quantile(values, 0.95)}};
    }
    entry["labels"] = labels;
    entry["stats"] = columns;
    out.push_back(entry);
  }
  return out;
}

CriterionStatus status(int id, std::string name, CriterionState state, std::string detail) {
  return {id, std::move(name), state, std::move(detail)};
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// Rows of multiplier.csv in the heavy-tail regime: StudentT coordinates with
// nu = 2 ln n, Pareto noise with q0 = 3, V = B_1, N = n.
std::map<int, std::vector<const Row*>> heavy_regime(const csv::Table& t) {
  std::map<int, std::vector<const Row*>> by_n;
  for (const auto& row : t.rows) {
    const double n = number(t, row, "n");
    if (text(t, row, "dist_family") != "StudentT" || text(t, row, "noise_family") != "SymmetricPareto" ||
        text(t, row, "set_family") != "L1Ball" || number(t, row, "q0") != 3.0 ||
        number(t, row, "N") != n || std::abs(number(t, row, "nu") - 2.0 * std::log(n)) > 1e-9)
      continue;
    by_n[static_cast<int>(n)].push_back(&row);
  }
  return by_n;
}

void multiplier_criteria(const csv::Table& t, std::vector<CriterionStatus>& out) {
  const auto by_n = heavy_regime(t);
  const bool have = by_n.count(64) && by_n.count(1024);
  const char* name4 = "ratio bounded from n = 64 to n = 1024";
  const char* name5 = "C_hat p95 stable from n = 64 to n = 1024";
  if (!have) {
    out.push_back(status(4, name4, CriterionState::kInsufficientData,
                         "needs heavy-tail cells at n = 64 and n = 1024"));
    out.push_back(status(5, name5, CriterionState::kInsufficientData,
                         "needs heavy-tail cells at n = 64 and n = 1024"));
  } else {
    auto column = [&](int n, const char* col) {
      std::vector<double> v;
      for (const Row* r : by_n.at(n)) v.push_back(number(t, *r, col));
      return v;
    };
    const double r64 = stats::mean_se(column(64, "ratio")).mean;
    const double r1024 = stats::mean_se(column(1024, "ratio")).mean;
    const bool ok4 = r1024 <= 1.5 * r64 && r1024 <= 10.0;
    out.push_back(status(4, name4, ok4 ? CriterionState::kPass : CriterionState::kFail,
                         "mean ratio " + num(r64) + " -> " + num(r1024)));
    const double c64 = stats::quantile(column(64, "C_hat"), 0.95);
    const double c1024 = stats::quantile(column(1024, "C_hat"), 0.95);
    const double change = std::abs(c1024 - c64) / c64;
    out.push_back(status(5, name5, change <= 0.5 ? CriterionState::kPass : CriterionState::kFail,
                         "p95 " + num(c64) + " -> " + num(c1024) + " (change " + num(change) + ")"));
  }

  // A_u: per cell and u, complement frequency against 2 / u^q0 + 3 se.
  std::map<int, std::vector<const Row*>> by_cell;
  for (const auto& row : t.rows)
    if (number(t, row, "q0") == 3.0) by_cell[static_cast<int>(number(t, row, "cell"))].push_back(&row);
  const char* name6 = "P(not A_u) <= 2 / u^3";
  int checked = 0;
  std::string worst;
  bool ok6 = true;
  for (const auto& [cell, rows] : by_cell) {
    if (rows.size() < 100) continue;
    const auto us = csv::split(text(t, *rows.front(), "u"), ';');
    for (std::size_t k = 0; k < us.size(); ++k) {
      const double u = *parse_number(us[k]);
      double misses = 0.0;
      for (const Row* r : rows) misses += csv::split(text(t, *r, "A_u"), ';').at(k) == "0" ? 1.0 : 0.0;
      const double p = misses / static_cast<double>(rows.size());
      const double bound = 2.0 / std::pow(u, 3.0) + 3.0 * std::sqrt(p * (1.0 - p) / rows.size());
      ++checked;
      if (p > bound) {
        ok6 = false;
        worst += " cell " + fmt(cell) + " u=" + num(u) + ": " + num(p) + " > " + num(bound) + ";";
      }
    }
  }
  if (checked == 0)
    out.push_back(status(6, name6, CriterionState::kInsufficientData,
                         "needs a q0 = 3 cell with >= 100 trials"));
  else
    out.push_back(status(6, name6, ok6 ? CriterionState::kPass : CriterionState::kFail,
                         fmt(checked) + " (cell, u) pairs checked" + worst));
}

void recovery_criteria(const csv::Table& t, std::vector<CriterionStatus>& out) {
  // Group cells by every parameter except N (for the rate) or s (for the
  // sparsity ratio).
  auto key_without = [&](const Row& row, const char* skip) {
    std::string key;
    for (const char* col : {"n", "s", "N", "family", "nu", "noise_family", "q0", "c1"})
      if (std::string(col) != skip) key += text(t, row, col) + "|";
    return key;
  };

  std::map<std::string, std::vector<std::pair<double, double>>> rate_groups;
  for (const auto& row : t.rows) {
    const double err = number(t, row, "err_l2_med");
    if (std::isfinite(err) && err > 0.0)
      rate_groups[key_without(row, "N")].emplace_back(number(t, row, "N"), err);
  }
  std::string detail;
  int slopes = 0;
  bool slope_ok = true;
  for (auto& [key, pts] : rate_groups) {
    if (pts.size() < 3) continue;
    std::vector<double> x, y;
    for (const auto& [nn, err] : pts) {
      x.push_back(std::log(nn));
      y.push_back(std::log(err));
    }
    const auto fit = stats::least_squares_line(x, y);
    ++slopes;
    const bool ok = std::abs(fit.slope + 0.5) <= 0.15;
    slope_ok = slope_ok && ok;
    detail += "slope " + num(fit.slope) + " [" + num(fit.ci_lo) + ", " + num(fit.ci_hi) + "]; ";
  }
  std::map<std::string, std::map<int, double>> ratio_groups;
  for (const auto& row : t.rows) {
    const double err = number(t, row, "err_l2_med");
    if (std::isfinite(err) && err > 0.0)
      ratio_groups[key_without(row, "s")][static_cast<int>(number(t, row, "s"))] = err;
  }
  int ratios = 0;
  bool ratio_ok = true;
  for (const auto& [key, by_s] : ratio_groups) {
    if (!by_s.count(2) || !by_s.count(8)) continue;
    const double r = by_s.at(8) / by_s.at(2);
    ++ratios;
    const bool ok = r >= 2.0 / 1.3 && r <= 2.0 * 1.3;
    ratio_ok = ratio_ok && ok;
    detail += "s8/s2 " + num(r) + "; ";
  }
  const char* name7 = "LASSO rate in N and s";
  CriterionState s7 = CriterionState::kPass;
  if ((slopes && !slope_ok) || (ratios && !ratio_ok))
    s7 = CriterionState::kFail;
  else if (!slopes || !ratios)
    s7 = CriterionState::kInsufficientData;
  if (!slopes) detail += "no group with 3 values of N; ";
  if (!ratios) detail += "no s = 2 / s = 8 pair; ";
  out.push_back(status(7, name7, s7, detail));

  // Basis pursuit: success monotone in N within 3 se, low at N = s + 2, high
  // at the largest N.
  std::map<std::string, std::vector<std::array<double, 3>>> bp_groups;
  for (const auto& row : t.rows) {
    const double rate = number(t, row, "success_rate");
    if (!std::isnan(rate))
      bp_groups[key_without(row, "N")].push_back(
          {number(t, row, "N"), rate, number(t, row, "success_se")});
  }
  const char* name8 = "basis pursuit success transition";
  std::string d8;
  bool any8 = false, fail8 = false, complete8 = false;
  for (auto& [key, pts] : bp_groups) {
    if (pts.size() < 2) continue;
    any8 = true;
    std::sort(pts.begin(), pts.end());
    bool mono = true;
    for (std::size_t k = 1; k < pts.size(); ++k) {
      const double slack = 3.0 * std::hypot(pts[k][2], pts[k - 1][2]);
      mono = mono && pts[k][1] >= pts[k - 1][1] - slack;
    }
    const double s = std::stod(key.substr(key.find('|') + 1));
    const auto low = std::find_if(pts.begin(), pts.end(), [&](const auto& p) { return p[0] == s + 2; });
    const bool high = pts.back()[1] >= 0.9;
    fail8 = fail8 || !mono || !high || (low != pts.end() && (*low)[1] > 0.1);
    complete8 = complete8 || low != pts.end();
    d8 += "rates";
    for (const auto& p : pts) d8 += " N=" + num(p[0]) + ":" + num(p[1]);
    d8 += mono ? " monotone; " : " not monotone; ";
  }
  CriterionState s8 = !any8        ? CriterionState::kInsufficientData
                      : fail8      ? CriterionState::kFail
                      : complete8  ? CriterionState::kPass
                                   : CriterionState::kInsufficientData;
  if (!any8) d8 = "needs basis-pursuit cells at two or more N";
  else if (!complete8 && !fail8) d8 += "no cell at N = s + 2";
  out.push_back(status(8, name8, s8, d8));
}

void gelfand_criteria(const csv::Table& t, std::vector<CriterionStatus>& out) {
  std::map<int, std::vector<const Row*>> by_cell;
  for (const auto& row : t.rows)
    if (text(t, row, "family") == "Gaussian" && text(t, row, "set_family") == "L1Ball")
      by_cell[static_cast<int>(number(t, row, "cell"))].push_back(&row);
  const char* name = "kernel diameter vs 2 r_G, r_X vs r_G";
  if (by_cell.empty()) {
    out.push_back(status(10, name, CriterionState::kInsufficientData,
                         "needs Gaussian / L1Ball cells"));
    return;
  }
  bool ok = true;
  std::string detail;
  for (const auto& [cell, rows] : by_cell) {
    int exceed = 0;
    for (const Row* r : rows)
      exceed += number(t, *r, "diam_lb") > 2.0 * number(t, *r, "r_G") ? 1 : 0;
    const double frac = static_cast<double>(exceed) / static_cast<double>(rows.size());
    const Row& r = *rows.front();
    const bool overlap = number(t, r, "r_X_lo") <= number(t, r, "r_G_hi") &&
                         number(t, r, "r_G_lo") <= number(t, r, "r_X_hi");
    ok = ok && frac <= 0.05 && overlap;
    detail += "cell " + fmt(cell) + ": exceed " + num(frac) + ", r_G " + num(number(t, r, "r_G")) +
              " r_X " + num(number(t, r, "r_X")) + (overlap ? " overlap; " : " disjoint; ");
  }
  out.push_back(status(10, name, ok ? CriterionState::kPass : CriterionState::kFail, detail));
}

const char* kCriterionNames[] = {
    "",
    "support function exactness",
    "width sanity",
    "Gaussian-equivalence control",
    "ratio bounded from n = 64 to n = 1024",
    "C_hat p95 stable from n = 64 to n = 1024",
    "P(not A_u) <= 2 / u^3",
    "LASSO rate in N and s",
    "basis pursuit success transition",
    "solver oracles",
    "kernel diameter vs 2 r_G, r_X vs r_G",
    "determinism across worker counts",
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

json ExperimentManifest::to_json() const {
  json files_j = json::array();
  for (const auto& [name, sum] : files) files_j.push_back({{"name", name}, {"sha256", sum}});
  json ledger = json::array();
  for (const auto& e : seed_ledger) ledger.push_back({{"cell", e.cell}, {"trial", e.trial}});
  json failed = json::array();
  for (const auto& f : failed_cells) failed.push_back({{"cell", f.cell}, {"message", f.message}});
  return {{"config_hash", config_hash},
          {"tool_version", tool_version},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"files", files_j},
          {"seed_derivation",
           "splitmix64 chain over (master_seed, cell, trial, stream tag); per-cell "
           "quantities use trial 2^64-1 (and 2^64-2 for r_X)"},
          {"master_seed", config.value("master_seed", std::uint64_t{0})},
          {"seed_ledger", ledger},
          {"failed_cells", failed},
          {"workers", workers},
          {"config", config},
          {"cells", cells}};
}

ExperimentManifest ExperimentManifest::from_json(const json& j) {
  ExperimentManifest m;
  try {
    m.config_hash = j.at("config_hash").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    for (const auto& f : j.at("files"))
      m.files.emplace_back(f.at("name").get<std::string>(), f.at("sha256").get<std::string>());
    for (const auto& e : j.at("seed_ledger"))
      m.seed_ledger.push_back({e.at("cell").get<int>(), e.at("trial").get<int>()});
    for (const auto& f : j.at("failed_cells"))
      m.failed_cells.push_back({f.at("cell").get<int>(), f.at("message").get<std::string>()});
    m.workers = j.value("workers", 0);
    m.config = j.at("config");
    m.cells = j.value("cells", json::array());
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

ExperimentManifest run(const ExperimentConfig& config, int workers) {
  if (config.trials < 0) throw ConfigError("'trials' must be >= 0");
  ExperimentManifest manifest;
  manifest.started_at = utc_now();
  manifest.config = config.to_json();
  manifest.config_hash = config.content_hash();

  const int previous = worker_count();
  set_worker_count(workers);
  manifest.workers = worker_count();
  Output out;
  try {
    switch (config.experiment) {
      case ExperimentKind::kWidths: out = run_widths(config); break;
      case ExperimentKind::kMultiplier: out = run_multiplier(config); break;
      case ExperimentKind::kRecovery: out = run_recovery(config); break;
      case ExperimentKind::kGelfand: out = run_gelfand(config); break;
      case ExperimentKind::kMoments: out = run_moments(config); break;
    }
  } catch (...) {
    set_worker_count(previous);
    throw;
  }
  set_worker_count(previous);

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  for (const auto& [name, table] : out.tables) {
    const std::string body = table.to_string();
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << body;
    if (!f) throw std::runtime_error("write failed for " + (dir / name).string());
    manifest.files.emplace_back(name, sha256_hex(body));
  }
  manifest.seed_ledger = std::move(out.ledger);
  manifest.failed_cells = std::move(out.failed);
  manifest.cells = std::move(out.cells);
  manifest.finished_at = utc_now();
  {
    std::ofstream f(dir / "manifest.json", std::ios::trunc);
    f << manifest.to_json().dump(2) << '\n';
    if (!f) throw std::runtime_error("cannot write manifest.json");
  }
  json summary = summarize(dir).to_json();
  summary["config_hash"] = manifest.config_hash;
  summary["experiment"] = std::string(to_string(config.experiment));
  std::ofstream f(dir / "summary.json", std::ios::trunc);
  f << summary.dump(2) << '\n';
  if (!f) throw std::runtime_error("cannot write summary.json");
  return manifest;
}

std::string_view to_string(CriterionState state) {
  switch (state) {
    case CriterionState::kPass: return "pass";
    case CriterionState::kFail: return "fail";
    case CriterionState::kInsufficientData: return "insufficient-data";
  }
  return "?";
}

json SummaryReport::to_json() const {
  json crit = json::array();
  for (const auto& c : criteria)
    crit.push_back({{"id", c.id},
                    {"name", c.name},
                    {"state", std::string(mplab::to_string(c.state))},
                    {"detail", c.detail}});
  return {{"cells", cells}, {"criteria", crit}};
}

std::string SummaryReport::to_text() const {
  std::ostringstream os;
  os << cells.size() << " cell aggregates\n";
  for (const auto& c : criteria)
    os << "criterion " << c.id << " [" << mplab::to_string(c.state) << "] " << c.name
       << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
  return os.str();
}

SummaryReport summarize(const std::filesystem::path& results_dir) {
  const auto manifest_path = results_dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path))
    throw IntegrityError("no manifest.json in " + results_dir.string());
  json mj;
  try {
    mj = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("manifest.json is not valid JSON: ") + e.what());
  }
  const ExperimentManifest manifest = ExperimentManifest::from_json(mj);

  SummaryReport report;
  std::map<std::string, csv::Table> tables;
  for (const auto& [name, sum] : manifest.files) {
    const std::string body = read_file(results_dir / name);
    if (sha256_hex(body) != sum) throw IntegrityError("checksum mismatch for " + name);
    tables.emplace(name, csv::parse(body));
    for (auto& e : aggregate(name, tables.at(name))) report.cells.push_back(std::move(e));
  }

  std::vector<CriterionStatus> found;
  if (tables.count("multiplier.csv")) multiplier_criteria(tables.at("multiplier.csv"), found);
  if (tables.count("recovery.csv")) recovery_criteria(tables.at("recovery.csv"), found);
  if (tables.count("gelfand.csv")) gelfand_criteria(tables.at("gelfand.csv"), found);
  for (int id = 1; id <= 11; ++id) {
    const auto it = std::find_if(found.begin(), found.end(), [&](const auto& c) { return c.id == id; });
    if (it != found.end()) {
      report.criteria.push_back(*it);
    } else {
      report.criteria.push_back(status(id, kCriterionNames[id], CriterionState::kInsufficientData,
                                       "not measured by this experiment; see the acceptance suite"));
    }
  }
  return report;
}

}  // namespace mplab
