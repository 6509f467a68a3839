#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "lokf/simlab.hpp"

namespace lokf {

/// Invalid configuration; `field` names the offending key.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string& field, const std::string& msg)
        : std::runtime_error(field + ": " + msg), field(field) {}
    std::string field;
};

struct RunConfig {
    SimConfig sim;
    std::string output_dir = "lokf_out";
};

/// Builds a config from JSON. Unknown keys and bad values raise ConfigError.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Fully resolved config; parse_run_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& c);

/// Thread count from the environment (LOKF_THREADS) or 1.
int default_threads();

}  // namespace lokf
