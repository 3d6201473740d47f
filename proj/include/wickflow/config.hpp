#pragma once

// JSON experiment configs. Top-level schema:
//   experiment (string, required), seed (u64), reps, workers (int or "auto"),
//   out (string), params (object, experiment-specific).
// Unknown keys are rejected at both levels: the top level here, the params
// level through ParamReader, which each experiment drains and then closes.
// Parse and schema problems throw ConfigError; numeric precondition
// violations surface later as std::invalid_argument from the target module.

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace wickflow {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 20260825;
  std::size_t reps = 0;  // 0 = experiment default
  int workers = 0;       // 0 = auto
  std::string out_dir;
  nlohmann::json params = nlohmann::json::object();
};

// Pulls typed values out of a params object and fails loudly on leftovers.
class ParamReader {
 public:
  explicit ParamReader(const nlohmann::json& params) : params_(params) {
    if (!params_.is_object()) throw ConfigError("params must be a JSON object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!params_.contains(key)) return fallback;
    try {
      return params_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("param '" + key + "': " + e.what());
    }
  }

  bool has(const std::string& key) const { return params_.contains(key); }

  // Every recognized key must have been requested before closing.
  void finish() const {
    for (const auto& [key, value] : params_.items())
      if (!seen_.count(key)) throw ConfigError("unknown param '" + key + "'");
  }

 private:
  const nlohmann::json& params_;
  std::set<std::string> seen_;
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  static const std::set<std::string> known = {"experiment", "seed",   "reps",
                                              "workers",    "out",    "params"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  ExperimentConfig cfg;
  if (!j.contains("experiment") || !j.at("experiment").is_string())
    throw ConfigError("config needs a string 'experiment'");
  cfg.experiment = j.at("experiment").get<std::string>();
  try {
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("reps")) cfg.reps = j.at("reps").get<std::size_t>();
    if (j.contains("workers")) {
      const auto& w = j.at("workers");
      if (w.is_string()) {
        if (w.get<std::string>() != "auto") throw ConfigError("workers: number or \"auto\"");
        cfg.workers = 0;
      } else {
        cfg.workers = w.get<int>();
        if (cfg.workers < 0) throw ConfigError("workers must be >= 0");
      }
    }
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    if (j.contains("params")) {
      if (!j.at("params").is_object()) throw ConfigError("params must be a JSON object");
      cfg.params = j.at("params");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("parse error in ") + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace wickflow
