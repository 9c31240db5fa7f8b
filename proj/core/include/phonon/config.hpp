#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "phonon/model.hpp"

namespace phonon {

// KEY=VALUE with a dotted KEY (sequence elements by index, e.g. "pulses.0.energy").
// VALUE is parsed as YAML, so lists and numbers use the file syntax.
struct ConfigOverride {
  std::string path;
  std::string value;
  static ConfigOverride parse(std::string_view text);
};

// Parses, applies overrides, fills derived fields and validates.
// Throws ValidationError with line/field context.
ExperimentConfig load_config(const std::string& path, const std::vector<ConfigOverride>& overrides = {});
ExperimentConfig parse_config(std::string_view text, const std::vector<ConfigOverride>& overrides = {},
                              std::string_view source = "<string>");

// Canonical YAML form; every derived field is written explicitly.
std::string serialize_config(const ExperimentConfig& config);

// Hex SHA-256 of the canonical form.
std::string config_digest(const ExperimentConfig& config);

}  // namespace phonon
