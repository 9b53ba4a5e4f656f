#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "flowhold/control.hpp"
#include "flowhold/sim.hpp"
#include "flowhold/telemetry.hpp"
#include "flowhold/tracker.hpp"

namespace flowhold {

/// Everything a simulation run needs. Layering: built-in defaults, then a
/// preset file, then a config file, then individual overrides.
struct RunConfig {
  std::string preset = "default";
  SimConfig sim;
  AxisGains gains;
  TrackerConfig tracker;

  void validate() const;
  ConfigDigest digest() const;
};

/// Applies a (possibly partial) JSON object. Unknown keys and wrong types
/// throw ConfigError with the dotted field path.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

/// Applies one "section.field=value" override; the value is read as JSON,
/// falling back to a plain string.
void apply_override(RunConfig& cfg, const std::string& assignment);

nlohmann::ordered_json to_json(const RunConfig& cfg);

RunConfig load_config_file(RunConfig base, const std::string& path);
RunConfig load_preset(const std::string& name, const std::string& preset_dir);

// Directory holding the shipped preset files.
std::string default_preset_dir();

}  // namespace flowhold
