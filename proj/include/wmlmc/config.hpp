#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "wmlmc/driver.hpp"

namespace wmlmc {

// Schema violation or unreadable/unparsable config; message carries the JSON
// path (schema errors) or the line number (parse errors).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutputConfig {
  std::string path;  // empty: resolved by the CLI (flag, env var, cwd)
  std::string format = "both";  // json | csv | both
};

struct ExperimentConfig {
  RunConfig run;
  OutputConfig output;
};

// Strict parse: unknown keys rejected at every nesting level, values
// type-checked, family-specific model parameters enforced.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);

ExperimentConfig load_experiment_config(const std::string& path);

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

}  // namespace wmlmc
