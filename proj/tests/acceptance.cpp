// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "fixtures.hpp"
#include "flowhold/cli.hpp"
#include "flowhold/config.hpp"
#include "flowhold/control.hpp"
#include "flowhold/corners.hpp"
#include "flowhold/flow.hpp"
#include "flowhold/sim.hpp"
#include "flowhold/telemetry.hpp"
#include "flowhold/tracker.hpp"
#include "oracles.hpp"

using namespace flowhold;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RunConfig preset(const std::string& name) {
  auto cfg = load_preset(name, default_preset_dir());
  cfg.validate();
  return cfg;
}

struct Flight {
  std::vector<FrameRecord> records;
  DispersionReport report;
  double runtime = 0.0;
};

Flight fly(const RunConfig& cfg, const TickObserver& observer = {}) {
  const auto t0 = Clock::now();
  Flight f;
  f.records = run_episode(cfg.sim, cfg.gains, cfg.tracker, observer).records;
  f.report = dispersion_stats(f.records, cfg.sim.settle_time, cfg.sim.frame_size_cm);
  f.runtime = seconds_since(t0);
  return f;
}

// 1 ------------------------------------------------------------------------
Outcome corner_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int set_mismatch = 0;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const int w = 16 + static_cast<int>(seed * 7 % 49);
    const int h = 12 + static_cast<int>(seed * 13 % 53);
    const auto img = seed % 2 ? fixture::random_image(w, h, seed)
                              : fixture::random_blocks(w, h, 4 + static_cast<int>(seed % 5), seed);
    DetectParams p;
    p.window_radius = 1 + static_cast<int>(seed % 3);
    p.max_corners = 10 + static_cast<int>(seed % 15);
    p.min_distance = 2.0 + static_cast<double>(seed % 4);
    p.quality_level = 0.01 * static_cast<double>(1 + seed % 10);
    const auto r = response_map(img, p.window_radius);
    const auto ref = oracle::response_map(img, p.window_radius);
    for (size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(r.data[i] - ref[i]));

    const Rect roi = seed % 3 ? Rect{0, 0, w, h} : center_roi(w, h);
    const auto got = detect_corners(img, roi, p);
    const auto want = oracle::detect_corners(img, roi, p);
    bool same = got.size() == want.size();
    for (size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].x == want[i].x && got[i].y == want[i].y;
    }
    if (!same) ++set_mismatch;
  }
  const double rt = seconds_since(t0);
  return {worst <= 1e-9 && set_mismatch == 0 && rt < 5.0,
          fmt("max |response - oracle| = %.3g, ordered-set mismatches = %d/25, runtime %.2fs", worst,
              set_mismatch, rt)};
}

// 2 ------------------------------------------------------------------------
Outcome flow_recovery() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> mag(0.3, 6.0);
  const LkParams lk;
  int total = 0, good = 0, tracked = 0;
  double worst_fb = 0.0;
  // 10 textures x 10 feature points, each texture with its own translation.
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const fixture::SmoothTexture tex(100 + trial);
    double dx, dy;
    do {
      const double a = angle(rng), m = mag(rng);
      dx = m * std::cos(a);
      dy = m * std::sin(a);
    } while (dx == std::floor(dx) || dy == std::floor(dy));
    const int size = 128;
    const auto img0 = tex.render(size, size);
    const auto img1 = tex.render(size, size, dx, dy);
    const auto p0 = build_pyramid(img0, lk.pyramid_levels);
    const auto p1 = build_pyramid(img1, lk.pyramid_levels);
    const int margin = lk.window_radius + 8;
    DetectParams dp;
    dp.max_corners = 10;
    dp.quality_level = 0.01;
    dp.min_distance = 8;
    const auto corners =
        detect_corners(img0, Rect{margin, margin, size - 2 * margin, size - 2 * margin}, dp);
    for (const auto& c : corners) {
      ++total;
      const Point2 pt{double(c.x), double(c.y)};
      const auto r = lk_track(p0, p1, pt, lk);
      if (!r.tracked()) continue;
      ++tracked;
      if (std::hypot(r.point.x - (pt.x + dx), r.point.y - (pt.y + dy)) <= 0.1) ++good;
      const auto back = lk_track(p1, p0, r.point, lk);
      const double fb = back.tracked() ? std::hypot(back.point.x - pt.x, back.point.y - pt.y)
                                       : std::numeric_limits<double>::infinity();
      worst_fb = std::max(worst_fb, fb);
    }
  }
  const double rt = seconds_since(t0);
  const bool ok = total == 100 && good >= 95 && worst_fb <= 0.2 && rt < 10.0;
  return {ok, fmt("%d/%d points tracked within 0.1 px (%d Tracked), worst forward-backward %.4f px, "
                  "runtime %.2fs",
                  good, total, tracked, worst_fb, rt)};
}

// 3 ------------------------------------------------------------------------
Outcome displacement_arithmetic() {
  bool ok = true;
  const auto a = displacement_from_center({480, 120}, 640, 480);
  ok &= a.x == 160.0 && a.y == -120.0 && a.d == 200.0;
  const auto b = displacement_from_center({160, 360}, 640, 480);
  ok &= b.x == -160.0 && b.y == 120.0 && b.d == 200.0;
  const auto c = displacement_from_center({320, 240}, 640, 480);
  ok &= c.x == 0.0 && c.y == 0.0 && c.d == 0.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0, 639), uy(0, 479);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto d = displacement_from_center({ux(rng), uy(rng)}, 640, 480);
    worst = std::max(worst, std::abs(d.d * d.d - (d.x * d.x + d.y * d.y)));
  }
  ok &= worst <= 1e-9;
  return {ok, fmt("(480,120)->(%g,%g,%g), (160,360)->(%g,%g,%g), worst |d^2-x^2-y^2| = %.3g", a.x,
                  a.y, a.d, b.x, b.y, b.d, worst)};
}

// 4 ------------------------------------------------------------------------
PidGains gains(double kp, double ki, double kd, double i_limit = 1e9, double out_limit = 1e9) {
  PidGains g;
  g.kp = kp;
  g.ki = ki;
  g.kd = kd;
  g.i_limit = i_limit;
  g.out_limit = out_limit;
  return g;
}

Outcome pid_closed_form() {
  const double dt = 0.04;
  const std::vector<double> errors = {10.0, -4.0, 25.0, 0.5, -13.0, 7.0};
  double worst = 0.0;
  auto check = [&](const PidGains& g, auto expected) {
    PidState s;
    for (size_t k = 0; k < errors.size(); ++k) {
      const auto r = pid_step(g, s, errors[k], dt);
      worst = std::max(worst, std::abs(r.output - expected(k)));
      s = r.state;
    }
  };
  check(gains(0.003, 0, 0), [&](size_t k) { return 0.003 * errors[k]; });
  check(gains(0, 0.02, 0), [&](size_t k) {
    double sum = 0.0;
    for (size_t i = 0; i <= k; ++i) sum += errors[i] * dt;
    return 0.02 * sum;
  });
  check(gains(0, 0, 0.005), [&](size_t k) {
    return k == 0 ? 0.0 : 0.005 * (errors[k] - errors[k - 1]) / dt;
  });

  const auto g = gains(0.01, 0.05, 0.02, 3.0, 0.2);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> err(-1000, 1000);
  std::uniform_real_distribution<double> step(1e-3, 0.5);
  std::bernoulli_distribution reset(0.05);
  PidState s;
  double max_out = 0.0, max_int = 0.0;
  for (int i = 0; i < 100000; ++i) {
    if (reset(rng)) s = reset_derivative(s);
    const auto r = pid_step(g, s, err(rng), step(rng));
    max_out = std::max(max_out, std::abs(r.output));
    max_int = std::max(max_int, std::abs(r.state.integral));
    s = r.state;
  }
  const bool ok = worst <= 1e-12 && max_out <= 0.2 && max_int <= 3.0;
  return {ok, fmt("worst closed-form error %.3g; over 1e5 steps max |out| %.6g (limit 0.2), max "
                  "|integral| %.6g (limit 3)",
                  worst, max_out, max_int)};
}

// 5 ------------------------------------------------------------------------
Outcome calm_equilibrium(const Flight& f) {
  return {f.report.two_sigma_radial < 2.0,
          fmt("two_sigma_radial %.4f cm (< 2), runtime %.1fs", f.report.two_sigma_radial, f.runtime)};
}

// 6 ------------------------------------------------------------------------
struct ImpulseRun {
  Flight flight;
  double max_tilt = 0.0;
};

ImpulseRun impulse_flight() {
  auto cfg = preset("calm");
  cfg.sim.initial_x = 0.30 / std::sqrt(2.0);
  cfg.sim.initial_y = 0.30 / std::sqrt(2.0);
  return {fly(cfg), cfg.sim.max_tilt};
}

Outcome impulse_recovery(const ImpulseRun& run) {
  double worst_late = 0.0, worst_cmd = 0.0, entered = -1.0;
  for (const auto& r : run.flight.records) {
    const double dist = std::hypot(r.pos_x, r.pos_y);
    if (entered < 0 && dist <= 0.05) entered = r.t;
    if (r.t >= 10.0) worst_late = std::max(worst_late, dist);
    worst_cmd = std::max({worst_cmd, std::abs(r.cmd_roll), std::abs(r.cmd_pitch)});
  }
  const auto& first = run.flight.records.front();
  const bool ok = worst_late <= 0.05 && worst_cmd <= run.max_tilt && entered >= 0 && entered <= 10.0;
  return {ok, fmt("start %.3f m off anchor, within 5 cm at t=%.2fs, worst distance after 10 s %.2f "
                  "cm, max |command| %.4f rad (limit %.2f)",
                  std::hypot(first.pos_x, first.pos_y), entered, worst_late * 100, worst_cmd,
                  run.max_tilt)};
}

// 7, 8 ---------------------------------------------------------------------
Outcome bracket(const Flight& f, double lo, double hi, double max_diameter) {
  const auto& r = f.report;
  const bool ok = r.two_sigma_radial >= lo && r.two_sigma_radial <= hi && r.hold_diameter < max_diameter;
  return {ok, fmt("two_sigma_radial %.2f cm in [%g, %g], hold_diameter %.2f cm (< %g), records %zu, "
                  "runtime %.1fs",
                  r.two_sigma_radial, lo, hi, r.hold_diameter, max_diameter, f.records.size(),
                  f.runtime)};
}

// 9 ------------------------------------------------------------------------
struct YawRun {
  Flight flight;
  int reacquisitions = 0;
  int outside_roi = 0;
  int new_features = 0;
};

YawRun yaw_flight() {
  auto cfg = preset("outdoor");
  cfg.sim.yaw_rate = 0.15;
  YawRun run;
  const Rect roi = center_roi(cfg.sim.width, cfg.sim.height);
  run.flight = fly(cfg, [&](const TickView& v) {
    for (const auto& e : v.events) {
      if (e.kind != TrackerEventKind::Reacquired) continue;
      ++run.reacquisitions;
      for (const auto& f : v.tracker.features) {
        ++run.new_features;
        if (!roi.contains(static_cast<int>(f.position.x), static_cast<int>(f.position.y)) ||
            f.position.x != std::floor(f.position.x) || f.position.y != std::floor(f.position.y)) {
          ++run.outside_roi;
        }
      }
    }
  });
  return run;
}

Outcome reacquisition(const YawRun& run, const Flight& outdoor) {
  const double limit = 2.0 * outdoor.report.two_sigma_radial;
  const bool ok = run.reacquisitions >= 1 && run.flight.report.two_sigma_radial <= limit &&
                  run.outside_roi == 0;
  return {ok, fmt("%d re-acquisitions, %d new features (%d outside center ROI), two_sigma_radial "
                  "%.2f cm (<= %.2f), runtime %.1fs",
                  run.reacquisitions, run.new_features, run.outside_roi,
                  run.flight.report.two_sigma_radial, limit, run.flight.runtime)};
}

// 10 -----------------------------------------------------------------------
RunConfig lowlight_baseline() {
  auto cfg = preset("lowlight");
  cfg.sim.lowlight = LowLightParams{};
  return cfg;
}

Outcome low_light(const Flight& dim, const Flight& base) {
  const double limit = 2.0 * base.report.two_sigma_radial;
  const bool ok = dim.report.blind_fraction < 0.05 && dim.report.two_sigma_radial <= limit;
  return {ok, fmt("blind_fraction %.4f (< 0.05), two_sigma_radial %.2f cm (<= 2 x %.2f baseline), "
                  "runtime %.1fs",
                  dim.report.blind_fraction, dim.report.two_sigma_radial,
                  base.report.two_sigma_radial, dim.runtime)};
}

// 11 -----------------------------------------------------------------------
Outcome blind_behavior() {
  const auto cfg = preset("blind");
  int not_blind = 0, nonzero_cmd = 0, integral_moved = 0;
  const auto f = fly(cfg, [&](const TickView& v) {
    if (v.controller.roll.integral != 0.0 || v.controller.pitch.integral != 0.0) ++integral_moved;
  });
  for (const auto& r : f.records) {
    if (r.disp_x || r.n_alive != 0) ++not_blind;
    if (r.cmd_roll != 0.0 || r.cmd_pitch != 0.0) ++nonzero_cmd;
  }
  const bool ok = !f.records.empty() && not_blind == 0 && nonzero_cmd == 0 && integral_moved == 0;
  return {ok, fmt("%zu records: %d not blind, %d nonzero commands, %d ticks with a nonzero integral",
                  f.records.size(), not_blind, nonzero_cmd, integral_moved)};
}

// 12 -----------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "flowhold_acceptance_determinism";
  fs::remove_all(root);
  struct Case {
    std::string preset;
    std::vector<std::string> extra;
  };
  const std::vector<Case> cases = {{"calm", {}}, {"lowlight", {"--duration", "20"}}};
  int identical = 0, compared = 0;
  std::string failures;
  for (const auto& c : cases) {
    std::string files[2][2];
    for (int run = 0; run < 2; ++run) {
      const auto dir = root / (c.preset + "_" + std::to_string(run));
      std::vector<std::string> args = {"simulate", "--preset", c.preset, "--out", dir.string()};
      args.insert(args.end(), c.extra.begin(), c.extra.end());
      std::ostringstream out, err;
      if (run_cli(args, out, err) != 0) failures += " " + c.preset + ": " + err.str();
      files[run][0] = slurp(dir / "telemetry.csv");
      files[run][1] = slurp(dir / "summary.json");
    }
    for (int k = 0; k < 2; ++k) {
      ++compared;
      if (!files[0][k].empty() && files[0][k] == files[1][k]) ++identical;
    }
  }
  fs::remove_all(root);
  return {identical == compared && failures.empty(),
          fmt("%d/%d file pairs byte-identical across repeated CLI runs (calm, lowlight)%s", identical,
              compared, failures.c_str())};
}

// 13 -----------------------------------------------------------------------
Outcome stats_arithmetic() {
  const double a = hold_diameter_cm(18.66, 58.0);
  const double b = hold_diameter_cm(10.55, 58.0);
  // Same arithmetic through dispersion_stats: x = +/-s for half the samples
  // gives std s exactly, so 2 sigma radial is 2s.
  std::vector<FrameRecord> recs;
  for (int i = 0; i < 100; ++i) {
    FrameRecord r;
    r.t = 0.04 * i;
    r.pos_x = (i % 2 ? 1.0 : -1.0) * 0.0933;
    recs.push_back(r);
  }
  const auto rep = dispersion_stats(recs, 0.0, 58.0);
  const bool ok = std::abs(a - 95.32) <= 0.01 && std::abs(b - 79.1) <= 0.01 &&
                  std::abs(rep.hold_diameter - 95.32) <= 0.01;
  return {ok, fmt("18.66/58 -> %.4f cm, 10.55/58 -> %.4f cm, via dispersion_stats %.4f cm", a, b,
                  rep.hold_diameter)};
}

}  // namespace

int main() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  const auto t0 = Clock::now();

  // The long flights are independent; fly them concurrently.
  auto calm = std::async(std::launch::async, [] { return fly(preset("calm")); });
  auto impulse = std::async(std::launch::async, impulse_flight);
  auto outdoor = std::async(std::launch::async, [] { return fly(preset("outdoor")); });
  auto indoor = std::async(std::launch::async, [] { return fly(preset("indoor")); });
  auto yaw = std::async(std::launch::async, yaw_flight);
  auto dim = std::async(std::launch::async, [] { return fly(preset("lowlight")); });
  auto bright = std::async(std::launch::async, [] { return fly(lowlight_baseline()); });

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
  criteria.emplace_back("corner oracle equivalence", corner_oracle);
  criteria.emplace_back("flow recovery", flow_recovery);
  criteria.emplace_back("displacement arithmetic", displacement_arithmetic);
  criteria.emplace_back("PID closed form and clamps", pid_closed_form);

  const auto calm_f = calm.get();
  const auto impulse_f = impulse.get();
  const auto outdoor_f = outdoor.get();
  const auto indoor_f = indoor.get();
  const auto yaw_f = yaw.get();
  const auto dim_f = dim.get();
  const auto bright_f = bright.get();

  criteria.emplace_back("calm equilibrium", [&] { return calm_equilibrium(calm_f); });
  criteria.emplace_back("impulse recovery", [&] { return impulse_recovery(impulse_f); });
  criteria.emplace_back("outdoor dispersion", [&] { return bracket(outdoor_f, 10, 25, 110); });
  criteria.emplace_back("indoor dispersion", [&] { return bracket(indoor_f, 5, 14, 90); });
  criteria.emplace_back("re-acquisition under yaw", [&] { return reacquisition(yaw_f, outdoor_f); });
  criteria.emplace_back("low light", [&] { return low_light(dim_f, bright_f); });
  criteria.emplace_back("blind behavior", blind_behavior);
  criteria.emplace_back("determinism", determinism);
  criteria.emplace_back("hold diameter arithmetic", stats_arithmetic);

  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed in "
            << fmt("%.1f", seconds_since(t0)) << "s" << std::endl;
  return failed == 0 ? 0 : 1;
}
