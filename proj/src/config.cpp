#include "mplab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "mplab/error.hpp"

namespace mplab {

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string require_string(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string())
    throw ConfigError(std::string(what) + " needs a string '" + key + "'");
  return j.at(key).get<std::string>();
}

}  // namespace

double resolve_tail_param(const json& value, int dim) {
  if (value.is_null()) return 0.0;
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) throw ConfigError("tail_param must be a number or a rule like \"2ln(n)\"");
  const std::string rule = value.get<std::string>();
  const std::string suffix = "ln(n)";
  if (rule.size() < suffix.size() || rule.compare(rule.size() - suffix.size(), suffix.size(), suffix))
    throw ConfigError("unknown tail_param rule '" + rule + "' (expected '<c>ln(n)')");
  const std::string factor = rule.substr(0, rule.size() - suffix.size());
  double c = 1.0;
  if (!factor.empty()) {
    std::size_t used = 0;
    try {
      c = std::stod(factor, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != factor.size()) throw ConfigError("bad factor in tail_param rule '" + rule + "'");
  }
  return c * std::log(static_cast<double>(dim));
}

DistributionSpec distribution_from_json(const json& j, int dim) {
  const auto family = coordinate_family_from_string(require_string(j, "family", "distribution"));
  const double tail = j.contains("tail_param") ? resolve_tail_param(j.at("tail_param"), dim) : 0.0;
  return DistributionSpec::make(family, tail, dim);
}

json to_json(const DistributionSpec& dist) {
  return {{"family", std::string(to_string(dist.family()))},
          {"tail_param", dist.tail_param()},
          {"scale", dist.scale()},
          {"dim", dist.dim()}};
}

NoiseSpec noise_from_json(const json& j) {
  const auto family = noise_family_from_string(require_string(j, "family", "noise"));
  if (j.contains("dependence") && j.at("dependence") != "IndependentOfX")
    throw ConfigError("only IndependentOfX noise is supported");
  return NoiseSpec::make(family, get_or(j, "q0", 3.0), get_or(j, "lq_norm", 1.0),
                         get_or(j, "tail_param", 0.0));
}

json to_json(const NoiseSpec& noise) {
  return {{"family", std::string(to_string(noise.family()))},
          {"q0", noise.q0()},
          {"lq_norm", noise.lq_norm()},
          {"tail_param", noise.tail_param()},
          {"dependence", "IndependentOfX"}};
}

IndexSetSpec index_set_from_json(const json& j, int dim) {
  const auto family = set_family_from_string(require_string(j, "family", "index set"));
  switch (family) {
    case SetFamily::kL1Ball:
      return IndexSetSpec::l1_ball(dim, get_or(j, "rho", 1.0));
    case SetFamily::kL2Ball:
      return IndexSetSpec::l2_ball(dim, get_or(j, "r", 1.0));
    case SetFamily::kSparseCap:
      if (!j.contains("s")) throw ConfigError("SparseCap needs 's'");
      return IndexSetSpec::sparse_cap(dim, get_or(j, "s", 1), get_or(j, "r", 1.0));
    case SetFamily::kL1CapL2:
      return IndexSetSpec::l1_cap_l2(dim, get_or(j, "rho", 1.0), get_or(j, "r", 1.0));
    case SetFamily::kPermutationPolytope: {
      const json w = j.contains("weights") ? j.at("weights") : json("ones");
      std::vector<double> weights;
      if (w.is_array()) {
        weights = w.get<std::vector<double>>();
        if (static_cast<int>(weights.size()) != dim)
          throw ConfigError("PermutationPolytope weights length differs from n");
      } else if (w == "ones") {
        weights.assign(static_cast<std::size_t>(dim), 1.0);
      } else if (w == "inverse_sqrt") {
        for (int k = 1; k <= dim; ++k) weights.push_back(1.0 / std::sqrt(double(k)));
      } else {
        throw ConfigError("PermutationPolytope weights must be an array, \"ones\" or \"inverse_sqrt\"");
      }
      return IndexSetSpec::permutation_polytope(std::move(weights));
    }
  }
  throw ConfigError("unreachable index set family");
}

json to_json(const IndexSetSpec& set) {
  json j = {{"family", std::string(to_string(set.family()))}, {"dim", set.dim()}};
  switch (set.family()) {
    case SetFamily::kL1Ball: j["rho"] = set.rho(); break;
    case SetFamily::kL2Ball: j["r"] = set.radius(); break;
    case SetFamily::kSparseCap:
      j["s"] = set.sparsity();
      j["r"] = set.radius();
      break;
    case SetFamily::kL1CapL2:
      j["rho"] = set.rho();
      j["r"] = set.radius();
      break;
    case SetFamily::kPermutationPolytope: j["weights"] = set.weights(); break;
  }
  return j;
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kWidths: return "widths";
    case ExperimentKind::kMultiplier: return "multiplier";
    case ExperimentKind::kRecovery: return "recovery";
    case ExperimentKind::kGelfand: return "gelfand";
    case ExperimentKind::kMoments: return "moments";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (auto k : {ExperimentKind::kWidths, ExperimentKind::kMultiplier, ExperimentKind::kRecovery,
                 ExperimentKind::kGelfand, ExperimentKind::kMoments})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "experiment" && key != "grids" && key != "trials" && key != "master_seed" &&
        key != "output_dir" && key != "tolerances")
      throw ConfigError("unknown config key '" + key + "'");
  ExperimentConfig c;
  c.experiment = experiment_kind_from_string(require_string(j, "experiment", "config"));
  c.grids = j.contains("grids") ? j.at("grids") : json::object();
  if (!c.grids.is_object()) throw ConfigError("'grids' must be an object");
  c.trials = get_or(j, "trials", 1);
  if (c.trials < 0) throw ConfigError("'trials' must be >= 0");
  if (j.contains("master_seed")) {
    const json& s = j.at("master_seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ConfigError("'master_seed' must be a non-negative 64-bit integer");
    c.master_seed = s.get<std::uint64_t>();
  }
  c.output_dir = get_or<std::string>(j, "output_dir", "results");
  c.tolerances = j.contains("tolerances") ? j.at("tolerances") : json::object();
  if (!c.tolerances.is_object()) throw ConfigError("'tolerances' must be an object");
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"experiment", std::string(to_string(experiment))},
          {"grids", grids},
          {"trials", trials},
          {"master_seed", master_seed},
          {"output_dir", output_dir},
          {"tolerances", tolerances}};
}

std::string ExperimentConfig::content_hash() const {
  json j = to_json();
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace mplab
