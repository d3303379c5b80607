// lab: run a Monte-Carlo experiment from a JSON config, summarize a results
// directory, or run the built-in invariant checks.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mplab/error.hpp"
#include "mplab/harness.hpp"
#include "selftest.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kConfigError = 2;

int run_experiment(const std::string& name, const std::string& config_path,
                   const std::optional<std::uint64_t>& seed, const std::string& out_flag,
                   int workers) {
  mplab::ExperimentConfig cfg = mplab::load_config(config_path);
  if (mplab::to_string(cfg.experiment) != name)
    throw mplab::ConfigError("config describes experiment '" +
                             std::string(mplab::to_string(cfg.experiment)) + "', not '" + name + "'");
  if (seed) cfg.master_seed = *seed;
  if (!out_flag.empty()) {
    cfg.output_dir = out_flag;
  } else if (const char* env = std::getenv("LAB_OUT_DIR"); env && *env) {
    cfg.output_dir = env;
  }
  if (workers < 0) throw mplab::ConfigError("--workers must be >= 0");

  const mplab::ExperimentManifest m = mplab::run(cfg, workers);
  std::cout << "wrote " << m.files.size() << " CSV files to " << cfg.output_dir << " (config "
            << m.config_hash.substr(0, 12) << ", " << m.seed_ledger.size() << " trials, "
            << m.workers << " workers)\n";
  for (const auto& f : m.failed_cells)
    std::cerr << "cell " << f.cell << " failed: " << f.message << '\n';
  return m.failed_cells.empty() ? kOk : kRuntimeFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplier-process experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int workers = 0;
  std::string selected;
  for (const char* name : {"widths", "multiplier", "recovery", "gelfand", "moments"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (else $LAB_OUT_DIR, else the config)");
    sub->add_option("--workers", workers, "OpenMP threads, 0 = default");
    sub->callback([&selected, name] { selected = name; });
  }
  std::string summary_dir;
  auto* summarize = app.add_subcommand("summarize", "verify and aggregate a results directory");
  summarize->add_option("dir", summary_dir, "results directory")->required();
  summarize->callback([&selected] { selected = "summarize"; });
  app.add_subcommand("selftest", "run the invariant checks")->callback([&selected] {
    selected = "selftest";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (selected == "selftest") return mplab::tools::selftest(std::cout) == 0 ? kOk : kRuntimeFailure;
    if (selected == "summarize") {
      const mplab::SummaryReport report = mplab::summarize(summary_dir);
      std::ofstream(std::filesystem::path(summary_dir) / "summary_report.json")
          << report.to_json().dump(2) << '\n';
      std::cout << report.to_text();
      return kOk;
    }
    return run_experiment(selected, config_path, seed, out_dir, workers);
  } catch (const mplab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}
