#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "asyncfl/harness.hpp"

namespace asyncfl {

/// Config file problem, already formatted as "<source>:<line>: <field path>: <what>".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a YAML experiment config. Unknown keys, wrong types and out-of-range
/// values raise ConfigError naming the field path and line.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config as YAML; parse_config(config_to_yaml(c)) == c.
std::string config_to_yaml(const ExperimentConfig& config);

}  // namespace asyncfl
