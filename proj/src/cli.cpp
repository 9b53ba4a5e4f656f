#include "flowhold/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "flowhold/config.hpp"
#include "flowhold/corners.hpp"
#include "flowhold/errors.hpp"
#include "flowhold/flow.hpp"
#include "flowhold/imaging.hpp"
#include "flowhold/sim.hpp"
#include "flowhold/telemetry.hpp"
#include "flowhold/tracker.hpp"

namespace flowhold {

namespace {

namespace fs = std::filesystem;

std::string g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Flags shared by every command that resolves a RunConfig.
struct ConfigFlags {
  std::string preset;
  std::string preset_dir = default_preset_dir();
  std::string config;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "Preset name (calm, outdoor, indoor, lowlight, blind)");
    cmd->add_option("--preset-dir", preset_dir, "Directory holding preset files");
    cmd->add_option("--config", config, "JSON config file applied after the preset");
    cmd->add_option("--set", overrides, "Field override, e.g. sim.wind.sigma=0.2 (repeatable)")
        ->take_all()
        ->expected(1);
  }

  RunConfig resolve() const {
    RunConfig cfg = preset.empty() ? RunConfig{} : load_preset(preset, preset_dir);
    if (!config.empty()) cfg = load_config_file(cfg, config);
    for (const auto& o : overrides) apply_override(cfg, o);
    return cfg;
  }
};

std::string summary_line(const DispersionReport& r, std::size_t records) {
  return "records=" + std::to_string(records) + " two_sigma_radial=" +
         fixed(r.two_sigma_radial, 2) + "cm hold_diameter=" + fixed(r.hold_diameter, 2) +
         "cm max_excursion=" + fixed(r.max_excursion, 2) + "cm std_x=" +
         fixed(r.std_x * 100.0, 2) + "cm std_y=" + fixed(r.std_y * 100.0, 2) +
         "cm blind_fraction=" + fixed(r.blind_fraction, 4);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int simulate_one(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  const auto telemetry = run_episode(cfg.sim, cfg.gains, cfg.tracker);
  const std::string csv = write_csv(telemetry.records);
  // Statistics come from the serialized records so `report` on the CSV
  // reproduces the summary exactly.
  const auto report =
      dispersion_stats(read_csv(csv), cfg.sim.settle_time, cfg.sim.frame_size_cm);
  fs::create_directories(dir);
  write_text(dir / "telemetry.csv", csv);
  write_text(dir / "summary.json", write_summary_json(report, cfg.digest()));
  out << summary_line(report, telemetry.records.size()) << "\n";
  return 0;
}

struct SimulateCmd {
  ConfigFlags config;
  std::optional<double> duration;
  std::string out_dir = ".";
  int sweep = 0;

  int run(std::ostream& out) const {
    RunConfig cfg = config.resolve();
    if (duration) cfg.sim.duration = *duration;
    cfg.validate();
    if (sweep <= 0) return simulate_one(cfg, out_dir, out);
    for (int i = 0; i < sweep; ++i) {
      RunConfig c = cfg;
      c.sim.texture_seed += static_cast<std::uint64_t>(i);
      c.sim.wind_seed += static_cast<std::uint64_t>(i);
      c.sim.noise_seed += static_cast<std::uint64_t>(i);
      char name[32];
      std::snprintf(name, sizeof name, "sweep_%03d", i);
      out << name << " ";
      simulate_one(c, fs::path(out_dir) / name, out);
    }
    return 0;
  }
};

struct CornersCmd {
  std::string image;
  DetectParams params;
  std::string roi = "full";
  std::string annotate;

  int run(std::ostream& out) const {
    const GrayImage img = read_pgm_file(image);
    const Rect area =
        roi == "center" ? center_roi(img.width(), img.height()) : Rect{0, 0, img.width(), img.height()};
    const auto corners = detect_corners(img, area, params);
    for (const auto& c : corners) {
      out << c.x << " " << c.y << " " << g9(c.response) << "\n";
    }
    if (!annotate.empty()) {
      std::vector<double> px(img.pixels().begin(), img.pixels().end());
      for (const auto& c : corners) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int x = c.x + dx, y = c.y + dy;
            if (x >= 0 && y >= 0 && x < img.width() && y < img.height()) {
              px[static_cast<size_t>(y) * img.width() + x] = 1.0;
            }
          }
        }
      }
      write_pgm_file(annotate, GrayImage(img.width(), img.height(), std::move(px)));
    }
    return 0;
  }
};

Point2 parse_point(const std::string& text) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument("");
    size_t used = 0;
    const double x = std::stod(text.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument("");
    const std::string ys = text.substr(comma + 1);
    const double y = std::stod(ys, &used);
    if (used != ys.size()) throw std::invalid_argument("");
    return {x, y};
  } catch (const std::exception&) {
    throw ArgumentError("--point expects x,y but got '" + text + "'");
  }
}

struct FlowCmd {
  std::string prev_path;
  std::string next_path;
  std::vector<std::string> points;
  bool auto_points = false;
  LkParams lk;
  DetectParams detect;

  int run(std::ostream& out) const {
    const GrayImage prev = read_pgm_file(prev_path);
    const GrayImage next = read_pgm_file(next_path);
    if (prev.width() != next.width() || prev.height() != next.height()) {
      throw SizeError("image sizes differ: " + std::to_string(prev.width()) + "x" +
                      std::to_string(prev.height()) + " vs " + std::to_string(next.width()) +
                      "x" + std::to_string(next.height()));
    }
    lk.validate();
    std::vector<Point2> starts;
    for (const auto& p : points) starts.push_back(parse_point(p));
    if (auto_points) {
      const int m = lk.window_radius + 1;
      const Rect area{m, m, prev.width() - 2 * m, prev.height() - 2 * m};
      if (area.empty()) throw SizeError("image too small for the tracking window");
      for (const auto& c : detect_corners(prev, area, detect)) {
        starts.push_back({double(c.x), double(c.y)});
      }
    }
    if (starts.empty() && !auto_points) throw ArgumentError("give at least one --point or --auto");
    const Pyramid p0 = build_pyramid(prev, lk.pyramid_levels);
    const Pyramid p1 = build_pyramid(next, lk.pyramid_levels);
    for (const auto& s : starts) {
      const FlowResult r = lk_track(p0, p1, s, lk);
      out << g9(s.x) << " " << g9(s.y) << " -> " << g9(r.point.x) << " " << g9(r.point.y) << " "
          << to_string(r.status) << " " << g9(r.residual) << "\n";
    }
    return 0;
  }
};

struct ReportCmd {
  std::string csv_path;
  std::optional<double> settle;
  ConfigFlags config;

  int run(std::ostream& out) const {
    const RunConfig cfg = config.resolve();
    const auto records = read_csv(read_text(csv_path));
    const auto report =
        dispersion_stats(records, settle.value_or(cfg.sim.settle_time), cfg.sim.frame_size_cm);
    out << write_summary_json(report, cfg.digest());
    return 0;
  }
};

struct ConfigCmd {
  ConfigFlags config;

  int run(std::ostream& out) const {
    const RunConfig cfg = config.resolve();
    cfg.validate();
    out << to_json(cfg).dump(2) << "\n";
    return 0;
  }
};

void add_detect_flags(CLI::App* cmd, DetectParams& p) {
  cmd->add_option("--max", p.max_corners, "Maximum number of corners");
  cmd->add_option("--quality", p.quality_level, "Threshold as a fraction of the best response");
  cmd->add_option("--min-distance", p.min_distance, "Minimum spacing between corners (px)");
  cmd->add_option("--window", p.window_radius, "Structure-tensor window radius (px)");
}

void add_lk_flags(CLI::App* cmd, LkParams& p) {
  cmd->add_option("--lk-window", p.window_radius, "Tracking window radius (px)");
  cmd->add_option("--levels", p.pyramid_levels, "Pyramid levels");
  cmd->add_option("--max-iterations", p.max_iterations, "Iterations per level");
  cmd->add_option("--epsilon", p.epsilon, "Convergence step (px)");
  cmd->add_option("--min-eigen", p.min_eigen_threshold, "Conditioning floor per window pixel");
  cmd->add_option("--residual-cap", p.residual_cap, "Maximum mean absolute residual");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optical-flow position hold: simulation and vision tools", "flowhold"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  SimulateCmd sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Fly one closed-loop episode and write telemetry");
  sim.config.attach(sim_cmd);
  sim_cmd->add_option("--duration", sim.duration, "Flight length in seconds (overrides config)");
  sim_cmd->add_option("--out", sim.out_dir, "Output directory for telemetry.csv and summary.json");
  sim_cmd->add_option("--sweep", sim.sweep, "Run N episodes with shifted seeds into out/sweep_NNN");

  CornersCmd corners;
  auto* corners_cmd = app.add_subcommand("corners", "Detect Shi-Tomasi corners in a PGM image");
  corners_cmd->add_option("image", corners.image, "Input PGM")->required();
  add_detect_flags(corners_cmd, corners.params);
  corners_cmd->add_option("--roi", corners.roi, "Search region")
      ->check(CLI::IsMember({"full", "center"}));
  corners_cmd->add_option("--annotate", corners.annotate, "Write a copy with corner markers");

  FlowCmd flow;
  auto* flow_cmd = app.add_subcommand("flow", "Track points between two PGM frames");
  flow_cmd->add_option("prev", flow.prev_path, "Previous frame")->required();
  flow_cmd->add_option("next", flow.next_path, "Next frame")->required();
  flow_cmd->add_option("--point", flow.points, "Start point x,y (repeatable)")
      ->take_all()
      ->expected(1);
  flow_cmd->add_flag("--auto", flow.auto_points, "Track corners detected in the previous frame");
  add_lk_flags(flow_cmd, flow.lk);
  add_detect_flags(flow_cmd, flow.detect);

  ReportCmd report;
  auto* report_cmd = app.add_subcommand("report", "Recompute the summary from a telemetry CSV");
  report_cmd->add_option("csv", report.csv_path, "Telemetry CSV")->required();
  report_cmd->add_option("--settle", report.settle, "Settle time in seconds (default from config)");
  report.config.attach(report_cmd);

  ConfigCmd config;
  auto* config_cmd = app.add_subcommand("config", "Print the resolved configuration as JSON");
  config.config.attach(config_cmd);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("flowhold");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim_cmd) return sim.run(out);
    if (*corners_cmd) return corners.run(out);
    if (*flow_cmd) return flow.run(out);
    if (*report_cmd) return report.run(out);
    if (*config_cmd) return config.run(out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace flowhold
