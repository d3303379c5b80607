#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "mplab/distributions.hpp"
#include "mplab/geometry.hpp"

namespace mplab {

using json = nlohmann::json;

/// {"family": "StudentT", "tail_param": 8.3}. tail_param may also be the
/// string "2ln(n)", resolved against `dim`.
DistributionSpec distribution_from_json(const json& j, int dim);
json to_json(const DistributionSpec& dist);

/// {"family": "SymmetricPareto", "q0": 3, "lq_norm": 1, "tail_param": 4}
NoiseSpec noise_from_json(const json& j);
json to_json(const NoiseSpec& noise);

/// {"family": "L1Ball", "rho": 1}, {"family": "SparseCap", "s": 4},
/// {"family": "L1CapL2", "rho": 1, "r": 0.5},
/// {"family": "PermutationPolytope", "weights": [..] | "ones" | "inverse_sqrt"}
IndexSetSpec index_set_from_json(const json& j, int dim);
json to_json(const IndexSetSpec& set);

/// Parses the tail_param rule "2ln(n)" or a number.
double resolve_tail_param(const json& value, int dim);

enum class ExperimentKind { kWidths, kMultiplier, kRecovery, kGelfand, kMoments };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kWidths;
  json grids = json::object();
  int trials = 1;
  std::uint64_t master_seed = 0;
  std::string output_dir = "results";
  json tolerances = json::object();

  static ExperimentConfig from_json(const json& j);
  json to_json() const;

  /// SHA-256 of the canonical (key-sorted, compact) JSON of the config
  /// without output_dir. Stable under key reordering.
  std::string content_hash() const;
};

ExperimentConfig load_config(const std::string& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace mplab
