#include "flowhold/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "flowhold/errors.hpp"

#ifndef FLOWHOLD_PRESET_DIR
#define FLOWHOLD_PRESET_DIR "presets"
#endif

namespace flowhold {

namespace {

using nlohmann::json;
using Setter = std::function<void(const json&, const std::string&)>;
using FieldTable = std::map<std::string, Setter>;

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, path + " must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, path + " must be an integer");
  return v.get<int>();
}

std::uint64_t as_seed(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError(path, path + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, path + " must be true or false");
  return v.get<bool>();
}

Setter num(double& field) {
  return [&field](const json& v, const std::string& p) { field = as_double(v, p); };
}
Setter integer(int& field) {
  return [&field](const json& v, const std::string& p) { field = as_int(v, p); };
}
Setter seed(std::uint64_t& field) {
  return [&field](const json& v, const std::string& p) { field = as_seed(v, p); };
}
Setter flag(bool& field) {
  return [&field](const json& v, const std::string& p) { field = as_bool(v, p); };
}

void apply_table(const FieldTable& table, const json& obj, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, path + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    const std::string sub = path + "." + key;
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(sub, "unknown config field " + sub);
    it->second(value, sub);
  }
}

Setter section(FieldTable table) {
  return [table = std::move(table)](const json& v, const std::string& p) {
    apply_table(table, v, p);
  };
}

FieldTable gains_table(PidGains& g) {
  return {{"kp", num(g.kp)},
          {"ki", num(g.ki)},
          {"kd", num(g.kd)},
          {"i_limit", num(g.i_limit)},
          {"out_limit", num(g.out_limit)}};
}

FieldTable sim_table(SimConfig& s) {
  return {
      {"physics_dt", num(s.physics_dt)},
      {"camera_rate", num(s.camera_rate)},
      {"altitude", num(s.altitude)},
      {"focal_px", num(s.focal_px)},
      {"width", integer(s.width)},
      {"height", integer(s.height)},
      {"tilt_tau", num(s.tilt_tau)},
      {"drag_coeff", num(s.drag_coeff)},
      {"gravity", num(s.gravity)},
      {"max_tilt", num(s.max_tilt)},
      {"wind", section({{"sigma", num(s.wind.sigma)}, {"rate", num(s.wind.rate)}})},
      {"lowlight",
       section({{"gain", num(s.lowlight.gain)}, {"noise", num(s.lowlight.noise)}})},
      {"yaw_rate", num(s.yaw_rate)},
      {"texture_seed", seed(s.texture_seed)},
      {"wind_seed", seed(s.wind_seed)},
      {"noise_seed", seed(s.noise_seed)},
      {"cell_size", num(s.cell_size)},
      {"anchor_marker", flag(s.anchor_marker)},
      {"blank_ground", flag(s.blank_ground)},
      {"blank_rect", section({{"x0", num(s.blank_rect.x0)},
                              {"y0", num(s.blank_rect.y0)},
                              {"x1", num(s.blank_rect.x1)},
                              {"y1", num(s.blank_rect.y1)}})},
      {"duration", num(s.duration)},
      {"frame_size_cm", num(s.frame_size_cm)},
      {"settle_time", num(s.settle_time)},
      {"initial_x", num(s.initial_x)},
      {"initial_y", num(s.initial_y)},
  };
}

FieldTable root_table(RunConfig& cfg) {
  auto& d = cfg.tracker.detect;
  auto& lk = cfg.tracker.lk;
  return {
      {"preset",
       [&cfg](const json& v, const std::string& p) {
         if (!v.is_string()) throw ConfigError(p, p + " must be a string");
         cfg.preset = v.get<std::string>();
       }},
      {"sim", section(sim_table(cfg.sim))},
      {"gains", section({{"roll", section(gains_table(cfg.gains.roll))},
                         {"pitch", section(gains_table(cfg.gains.pitch))}})},
      {"tracker", section({{"min_alive", integer(cfg.tracker.min_alive)}})},
      {"detect", section({{"max_corners", integer(d.max_corners)},
                          {"quality_level", num(d.quality_level)},
                          {"min_distance", num(d.min_distance)},
                          {"window_radius", integer(d.window_radius)}})},
      {"lk", section({{"window_radius", integer(lk.window_radius)},
                      {"pyramid_levels", integer(lk.pyramid_levels)},
                      {"max_iterations", integer(lk.max_iterations)},
                      {"epsilon", num(lk.epsilon)},
                      {"min_eigen_threshold", num(lk.min_eigen_threshold)},
                      {"residual_cap", num(lk.residual_cap)}})},
  };
}

}  // namespace

void RunConfig::validate() const {
  sim.validate();
  gains.roll.validate("gains.roll");
  gains.pitch.validate("gains.pitch");
  tracker.validate();
}

ConfigDigest RunConfig::digest() const {
  return ConfigDigest{preset, sim.texture_seed, sim.wind_seed, sim.noise_seed};
}

void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config", "config root must be a JSON object");
  const FieldTable table = root_table(cfg);
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown config field " + key);
    it->second(value, key);
  }
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override '" + assignment + "' must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json root = json::object();
  json* cursor = &root;
  size_t start = 0;
  while (true) {
    const size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError(key, "malformed override key '" + key + "'");
    if (dot == std::string::npos) {
      (*cursor)[part] = value;
      break;
    }
    cursor = &(*cursor)[part];
    *cursor = json::object();
    start = dot + 1;
  }
  apply_json(cfg, root);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  const auto& s = c.sim;
  auto gains = [](const PidGains& g) {
    return nlohmann::ordered_json{{"kp", g.kp},
                                  {"ki", g.ki},
                                  {"kd", g.kd},
                                  {"i_limit", g.i_limit},
                                  {"out_limit", g.out_limit}};
  };
  nlohmann::ordered_json j;
  j["preset"] = c.preset;
  j["sim"] = {
      {"physics_dt", s.physics_dt},
      {"camera_rate", s.camera_rate},
      {"altitude", s.altitude},
      {"focal_px", s.focal_px},
      {"width", s.width},
      {"height", s.height},
      {"tilt_tau", s.tilt_tau},
      {"drag_coeff", s.drag_coeff},
      {"gravity", s.gravity},
      {"max_tilt", s.max_tilt},
      {"wind", {{"sigma", s.wind.sigma}, {"rate", s.wind.rate}}},
      {"lowlight", {{"gain", s.lowlight.gain}, {"noise", s.lowlight.noise}}},
      {"yaw_rate", s.yaw_rate},
      {"texture_seed", s.texture_seed},
      {"wind_seed", s.wind_seed},
      {"noise_seed", s.noise_seed},
      {"cell_size", s.cell_size},
      {"anchor_marker", s.anchor_marker},
      {"blank_ground", s.blank_ground},
      {"blank_rect",
       {{"x0", s.blank_rect.x0}, {"y0", s.blank_rect.y0}, {"x1", s.blank_rect.x1},
        {"y1", s.blank_rect.y1}}},
      {"duration", s.duration},
      {"frame_size_cm", s.frame_size_cm},
      {"settle_time", s.settle_time},
      {"initial_x", s.initial_x},
      {"initial_y", s.initial_y},
  };
  j["gains"] = {{"roll", gains(c.gains.roll)}, {"pitch", gains(c.gains.pitch)}};
  j["tracker"] = {{"min_alive", c.tracker.min_alive}};
  const auto& d = c.tracker.detect;
  j["detect"] = {{"max_corners", d.max_corners},
                 {"quality_level", d.quality_level},
                 {"min_distance", d.min_distance},
                 {"window_radius", d.window_radius}};
  const auto& lk = c.tracker.lk;
  j["lk"] = {{"window_radius", lk.window_radius},
             {"pyramid_levels", lk.pyramid_levels},
             {"max_iterations", lk.max_iterations},
             {"epsilon", lk.epsilon},
             {"min_eigen_threshold", lk.min_eigen_threshold},
             {"residual_cap", lk.residual_cap}};
  return j;
}

RunConfig load_config_file(RunConfig base, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot read config file " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path, "config file " + path + " is not valid JSON");
  apply_json(base, j);
  return base;
}

RunConfig load_preset(const std::string& name, const std::string& preset_dir) {
  const auto path = std::filesystem::path(preset_dir) / (name + ".json");
  if (!std::filesystem::exists(path)) {
    throw ConfigError("preset", "unknown preset '" + name + "' (no " + path.string() + ")");
  }
  RunConfig cfg;
  cfg.preset = name;
  return load_config_file(cfg, path.string());
}

std::string default_preset_dir() {
  if (const char* env = std::getenv("FLOWHOLD_PRESET_DIR")) return env;
  return FLOWHOLD_PRESET_DIR;
}

}  // namespace flowhold
