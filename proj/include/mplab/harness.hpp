#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mplab/config.hpp"

namespace mplab {

inline constexpr const char* kToolVersion = "0.3.0";

struct SeedLedgerEntry {
  int cell = 0;
  int trial = 0;
};

struct FailedCell {
  int cell = 0;
  std::string message;
};

struct ExperimentManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::string started_at;
  std::string finished_at;
  std::vector<std::pair<std::string, std::string>> files;  // name -> sha256
  std::vector<SeedLedgerEntry> seed_ledger;
  std::vector<FailedCell> failed_cells;
  int workers = 0;
  json config;
  json cells = json::array();  // parameters of each grid cell, by index

  json to_json() const;
  static ExperimentManifest from_json(const json& j);
};

/// Runs every grid cell x trial of the config and writes its CSV files,
/// summary.json and manifest.json into config.output_dir. Each trial is a
/// pure function of (config, master_seed, cell, trial); trials run on
/// `workers` OpenMP threads (0 = default) and rows are written in
/// (cell, trial) order, so the CSVs do not depend on the worker count.
ExperimentManifest run(const ExperimentConfig& config, int workers = 0);

enum class CriterionState { kPass, kFail, kInsufficientData };

struct CriterionStatus {
  int id = 0;
  std::string name;
  CriterionState state = CriterionState::kInsufficientData;
  std::string detail;
};

struct SummaryReport {
  json cells = json::array();      // per-file, per-cell aggregates
  std::vector<CriterionStatus> criteria;

  json to_json() const;
  std::string to_text() const;
};

/// Verifies every checksum in manifest.json (IntegrityError naming the file on
/// mismatch), aggregates per-cell statistics and evaluates the acceptance
/// criteria the stored data can speak to.
SummaryReport summarize(const std::filesystem::path& results_dir);

std::string_view to_string(CriterionState state);

}  // namespace mplab
