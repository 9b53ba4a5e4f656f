#include "flowhold/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowhold/errors.hpp"
#include "flowhold/flow.hpp"

namespace flowhold {

namespace {

void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ConfigError(std::string("sim.") + field, std::string("sim.") + field + " " + what);
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

void SimConfig::validate() const {
  require(physics_dt > 0.0 && std::isfinite(physics_dt), "physics_dt", "must be > 0");
  require(camera_rate > 0.0 && std::isfinite(camera_rate), "camera_rate", "must be > 0");
  require(altitude > 0.0 && std::isfinite(altitude), "altitude", "must be > 0");
  require(focal_px > 0.0 && std::isfinite(focal_px), "focal_px", "must be > 0");
  require(width >= 16, "width", "must be >= 16");
  require(height >= 16, "height", "must be >= 16");
  require(tilt_tau > 0.0, "tilt_tau", "must be > 0");
  require(physics_dt <= tilt_tau, "physics_dt", "must not exceed tilt_tau");
  require(drag_coeff >= 0.0, "drag_coeff", "must be >= 0");
  require(gravity > 0.0, "gravity", "must be > 0");
  require(max_tilt > 0.0 && max_tilt < 1.5, "max_tilt", "must be in (0, 1.5)");
  require(wind.sigma >= 0.0, "wind.sigma", "must be >= 0");
  require(wind.rate > 0.0, "wind.rate", "must be > 0");
  require(lowlight.gain > 0.0 && lowlight.gain <= 1.0, "lowlight.gain", "must be in (0, 1]");
  require(lowlight.noise >= 0.0, "lowlight.noise", "must be >= 0");
  require(std::isfinite(yaw_rate), "yaw_rate", "must be finite");
  require(cell_size > ground_sample_distance(), "cell_size",
          "must exceed the ground sample distance altitude/focal_px");
  require(blank_rect.x1 > blank_rect.x0 && blank_rect.y1 > blank_rect.y0, "blank_rect",
          "must have x1 > x0 and y1 > y0");
  require(duration > 0.0 && std::isfinite(duration), "duration", "must be > 0");
  require(frame_size_cm >= 0.0, "frame_size_cm", "must be >= 0");
  require(settle_time >= 0.0, "settle_time", "must be >= 0");
  require(std::isfinite(initial_x) && std::isfinite(initial_y), "initial_x",
          "initial position must be finite");
  const double ratio = frame_interval() / physics_dt;
  require(std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio && std::round(ratio) >= 1.0,
          "physics_dt", "must divide the camera frame interval 1/camera_rate exactly");
}

int SimConfig::substeps_per_frame() const {
  return static_cast<int>(std::lround(frame_interval() / physics_dt));
}

std::size_t SimConfig::record_count() const {
  return static_cast<std::size_t>(std::floor(duration * camera_rate + 1e-9)) + 1;
}

GroundTexture GroundTexture::from_config(const SimConfig& cfg) {
  return GroundTexture{cfg.texture_seed, cfg.cell_size, cfg.anchor_marker, cfg.blank_ground,
                       cfg.blank_rect};
}

double GroundTexture::cell_value(std::int64_t i, std::int64_t j) const {
  if (anchor_marker && (i == 0 || i == -1) && (j == 0 || j == -1)) {
    return i == j ? 1.0 : 0.0;
  }
  std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(i) * 0xC2B2AE3D27D4EB4FULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(j) * 0x165667B19E3779F9ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

namespace {

inline std::int64_t floor_index(double v) {
  auto i = static_cast<std::int64_t>(v);
  return v < static_cast<double>(i) ? i - 1 : i;
}

bool in_blank(const GroundTexture& tex, double x, double y) {
  return tex.blank_ground && x >= tex.blank_rect.x0 && x < tex.blank_rect.x1 &&
         y >= tex.blank_rect.y0 && y < tex.blank_rect.y1;
}

}  // namespace

double texture_at(const GroundTexture& tex, double x, double y) {
  if (in_blank(tex, x, y)) return 0.5;
  const double inv_cell = 1.0 / tex.cell_size;
  const auto i = floor_index(x * inv_cell);
  const auto j = floor_index(y * inv_cell);
  return tex.cell_value(i, j);
}

namespace {

// Cell values over the index box a frame can touch; avoids re-hashing the
// same cell for every pixel it covers.
class CellTable {
 public:
  CellTable(const GroundTexture& tex, std::int64_t i_min, std::int64_t j_min,
            std::int64_t i_max, std::int64_t j_max)
      : i_min_(i_min), j_min_(j_min), cols_(i_max - i_min + 1) {
    values_.reserve(static_cast<size_t>(cols_ * (j_max - j_min + 1)));
    for (std::int64_t j = j_min; j <= j_max; ++j) {
      for (std::int64_t i = i_min; i <= i_max; ++i) values_.push_back(tex.cell_value(i, j));
    }
  }
  double operator()(std::int64_t i, std::int64_t j) const {
    return values_[static_cast<size_t>((j - j_min_) * cols_ + (i - i_min_))];
  }

 private:
  std::int64_t i_min_, j_min_, cols_;
  std::vector<double> values_;
};

// Per-axis split of a pixel footprint across at most two cells.
struct AxisSpan {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  double w_lo = 1.0;
};

std::vector<AxisSpan> axis_spans(double origin, double gsd, double cell, int n) {
  const double inv_cell = 1.0 / cell;
  std::vector<AxisSpan> spans(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double c = origin + k * gsd;
    const double lo = c - 0.5 * gsd;
    auto& s = spans[static_cast<size_t>(k)];
    s.lo = floor_index(lo * inv_cell);
    s.hi = floor_index((c + 0.5 * gsd) * inv_cell);
    s.w_lo = s.hi == s.lo ? 1.0 : std::clamp((s.hi * cell - lo) / gsd, 0.0, 1.0);
  }
  return spans;
}

void render_axis_aligned(const CellTable& cells, double origin_x, double origin_y, double gsd,
                         double cell, int w, int h, std::vector<double>& data) {
  const auto xs = axis_spans(origin_x, gsd, cell, w);
  const auto ys = axis_spans(origin_y, gsd, cell, h);
  for (int v = 0; v < h; ++v) {
    const auto& sy = ys[static_cast<size_t>(v)];
    double* row = &data[static_cast<size_t>(v) * w];
    for (int u = 0; u < w; ++u) {
      const auto& sx = xs[static_cast<size_t>(u)];
      // Blend as offsets from the first cell so uniform areas stay exact.
      const double base = cells(sx.lo, sy.lo);
      double val = base;
      if (sx.w_lo < 1.0) val += (1.0 - sx.w_lo) * sy.w_lo * (cells(sx.hi, sy.lo) - base);
      if (sy.w_lo < 1.0) {
        val += sx.w_lo * (1.0 - sy.w_lo) * (cells(sx.lo, sy.hi) - base);
        if (sx.w_lo < 1.0) {
          val += (1.0 - sx.w_lo) * (1.0 - sy.w_lo) * (cells(sx.hi, sy.hi) - base);
        }
      }
      row[u] = val;
    }
  }
}

// Low-light gain, sensor noise and the final clamp to [0, 1].
void finish_pixels(std::vector<double>& data, double gain, double sigma, NormalStream& noise) {
  for (double& p : data) {
    double val = p * gain;
    if (sigma > 0.0) val += sigma * noise.next();
    p = std::clamp(val, 0.0, 1.0);
  }
}

}  // namespace

GrayImage render_frame(const GroundTexture& tex, const VehicleState& vehicle,
                       const SimConfig& cfg, NormalStream& noise) {
  const int w = cfg.width;
  const int h = cfg.height;
  const double gsd = cfg.ground_sample_distance();
  const double inv_cell = 1.0 / tex.cell_size;
  const double cx = w / 2;
  const double cy = h / 2;
  const double cs = std::cos(vehicle.yaw);
  const double sn = std::sin(vehicle.yaw);
  // Footprint center of pixel (u, v) = origin + u * du + v * dv.
  const double du_x = cs * gsd, du_y = sn * gsd;
  const double dv_x = -sn * gsd, dv_y = cs * gsd;
  const double bx = (-cx + 0.5) * gsd;
  const double by = (-cy + 0.5) * gsd;
  const double origin_x = vehicle.pos.x + cs * bx - sn * by;
  const double origin_y = vehicle.pos.y + sn * bx + cs * by;
  const double half = 0.5 * gsd;
  const double gain = cfg.lowlight.gain;
  const double sigma = cfg.lowlight.noise;

  double min_x = origin_x, max_x = origin_x, min_y = origin_y, max_y = origin_y;
  for (const auto& [u, v] : {std::pair{w - 1, 0}, std::pair{0, h - 1}, std::pair{w - 1, h - 1}}) {
    const double fx = origin_x + u * du_x + v * dv_x;
    const double fy = origin_y + u * du_y + v * dv_y;
    min_x = std::min(min_x, fx);
    max_x = std::max(max_x, fx);
    min_y = std::min(min_y, fy);
    max_y = std::max(max_y, fy);
  }
  const CellTable cells(tex, floor_index((min_x - gsd) * inv_cell) - 1,
                        floor_index((min_y - gsd) * inv_cell) - 1,
                        floor_index((max_x + gsd) * inv_cell) + 1,
                        floor_index((max_y + gsd) * inv_cell) + 1);
  const bool blank = tex.blank_ground;
  auto value = [&](std::int64_t i, std::int64_t j, double sx, double sy) {
    return blank && in_blank(tex, sx, sy) ? 0.5 : cells(i, j);
  };

  std::vector<double> data(static_cast<size_t>(w) * h);
  if (sn == 0.0 && cs == 1.0 && !blank) {
    render_axis_aligned(cells, origin_x, origin_y, gsd, tex.cell_size, w, h, data);
    finish_pixels(data, gain, sigma, noise);
    return GrayImage(w, h, std::move(data));
  }
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const double fx = origin_x + u * du_x + v * dv_x;
      const double fy = origin_y + u * du_y + v * dv_y;
      const double x0 = fx - half;
      const double y0 = fy - half;
      const auto i0 = floor_index(x0 * inv_cell);
      const auto i1 = floor_index((fx + half) * inv_cell);
      const auto j0 = floor_index(y0 * inv_cell);
      const auto j1 = floor_index((fy + half) * inv_cell);
      double val;
      if (i0 == i1 && j0 == j1) {
        val = value(i0, j0, fx, fy);
      } else {
        // Fraction of the footprint in the lower cell along each axis.
        const double wx = i1 == i0 ? 1.0 : std::clamp((i1 * tex.cell_size - x0) / gsd, 0.0, 1.0);
        const double wy = j1 == j0 ? 1.0 : std::clamp((j1 * tex.cell_size - y0) / gsd, 0.0, 1.0);
        // Sub-box centers decide blank membership.
        const double xs0 = x0 + 0.5 * wx * gsd;
        const double xs1 = x0 + wx * gsd + 0.5 * (1.0 - wx) * gsd;
        const double ys0 = y0 + 0.5 * wy * gsd;
        const double ys1 = y0 + wy * gsd + 0.5 * (1.0 - wy) * gsd;
        const double base = value(i0, j0, xs0, ys0);
        val = base;
        if (wx < 1.0) val += (1.0 - wx) * wy * (value(i1, j0, xs1, ys0) - base);
        if (wy < 1.0) {
          val += wx * (1.0 - wy) * (value(i0, j1, xs0, ys1) - base);
          if (wx < 1.0) val += (1.0 - wx) * (1.0 - wy) * (value(i1, j1, xs1, ys1) - base);
        }
      }
      data[static_cast<size_t>(v) * w + u] = val;
    }
  }
  finish_pixels(data, gain, sigma, noise);
  return GrayImage(w, h, std::move(data));
}

WindState wind_step(const WindState& w, const WindParams& params, double dt, NormalStream& rng) {
  if (!(dt > 0.0)) throw ArgumentError("wind_step: dt must be > 0");
  WindState out = w;
  if (params.sigma == 0.0) {
    out.accel.x -= params.rate * w.accel.x * dt;
    out.accel.y -= params.rate * w.accel.y * dt;
    return out;
  }
  const double kick = params.sigma * std::sqrt(dt);
  out.accel.x += -params.rate * w.accel.x * dt + kick * rng.next();
  out.accel.y += -params.rate * w.accel.y * dt + kick * rng.next();
  return out;
}

VehicleState step_dynamics(const VehicleState& v, const AttitudeCommand& cmd,
                           const WindState& wind, const SimConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw ArgumentError("step_dynamics: dt must be > 0");
  VehicleState n = v;
  const double lag = dt / cfg.tilt_tau;
  const double target_roll = std::clamp(cmd.roll, -cfg.max_tilt, cfg.max_tilt);
  const double target_pitch = std::clamp(cmd.pitch, -cfg.max_tilt, cfg.max_tilt);
  n.tilt.x = std::clamp(v.tilt.x + (target_roll - v.tilt.x) * lag, -cfg.max_tilt, cfg.max_tilt);
  n.tilt.y = std::clamp(v.tilt.y + (target_pitch - v.tilt.y) * lag, -cfg.max_tilt, cfg.max_tilt);

  // Tilt acts along the body axes, which the yaw rotates into the world.
  const double body_x = cfg.gravity * std::tan(n.tilt.x);
  const double body_y = cfg.gravity * std::tan(n.tilt.y);
  const double cs = std::cos(v.yaw);
  const double sn = std::sin(v.yaw);
  const double ax = cs * body_x - sn * body_y + wind.accel.x - cfg.drag_coeff * v.vel.x;
  const double ay = sn * body_x + cs * body_y + wind.accel.y - cfg.drag_coeff * v.vel.y;
  n.vel.x = v.vel.x + ax * dt;
  n.vel.y = v.vel.y + ay * dt;
  n.pos.x = v.pos.x + n.vel.x * dt;
  n.pos.y = v.pos.y + n.vel.y * dt;
  n.yaw = v.yaw + cfg.yaw_rate * dt;
  n.t = v.t + dt;
  return n;
}

Telemetry run_episode(const SimConfig& cfg, const AxisGains& gains,
                      const TrackerConfig& tracker_cfg, const TickObserver& observer) {
  cfg.validate();
  gains.roll.validate("gains.roll");
  gains.pitch.validate("gains.pitch");
  tracker_cfg.validate();

  const GroundTexture tex = GroundTexture::from_config(cfg);
  const std::size_t n_records = cfg.record_count();
  const int substeps = cfg.substeps_per_frame();
  const double frame_dt = cfg.frame_interval();

  NormalStream wind_rng(cfg.wind_seed);
  NormalStream noise_rng(cfg.noise_seed);
  VehicleState vehicle;
  vehicle.pos = {cfg.initial_x, cfg.initial_y};
  WindState wind;
  ControllerState ctrl;
  TrackerState tracker;
  Pyramid prev_pyr;

  Telemetry telemetry;
  telemetry.records.reserve(n_records);
  std::vector<TrackerEvent> events;

  for (std::size_t k = 0; k < n_records; ++k) {
    const GrayImage frame = render_frame(tex, vehicle, cfg, noise_rng);
    Pyramid pyr = build_pyramid(frame, tracker_cfg.lk.pyramid_levels);

    const auto prev_best = tracker.best_id;
    const int prev_generation = tracker.generation;
    events.clear();
    if (k == 0) {
      tracker = acquire(frame, tracker_cfg);
    } else {
      auto res = advance(tracker, prev_pyr, pyr, tracker_cfg);
      tracker = std::move(res.state);
      events = std::move(res.events);
    }
    if (tracker.best_id != prev_best || tracker.generation != prev_generation) {
      ctrl.roll = reset_derivative(ctrl.roll);
      ctrl.pitch = reset_derivative(ctrl.pitch);
    }

    const auto disp = best_displacement(tracker, cfg.width, cfg.height);
    const AttitudeCommand cmd = position_hold_step(ctrl, gains, disp, frame_dt);

    FrameRecord rec;
    rec.t = static_cast<double>(k) / cfg.camera_rate;
    rec.pos_x = vehicle.pos.x;
    rec.pos_y = vehicle.pos.y;
    rec.vel_x = vehicle.vel.x;
    rec.vel_y = vehicle.vel.y;
    if (disp) {
      rec.disp_x = disp->x;
      rec.disp_y = disp->y;
      rec.disp_d = disp->d;
    }
    rec.cmd_roll = cmd.roll;
    rec.cmd_pitch = cmd.pitch;
    rec.n_alive = tracker.alive_count();
    rec.generation = tracker.generation;
    for (const auto& e : events) {
      if (e.kind == TrackerEventKind::Reacquired) rec.events.reacquired = true;
      if (e.kind == TrackerEventKind::FeatureLost) rec.events.feature_lost = true;
    }
    rec.events.blind = tracker.blind;
    telemetry.records.push_back(rec);
    if (observer) observer(TickView{telemetry.records.back(), vehicle, ctrl, tracker, events});

    if (k + 1 < n_records) {
      for (int s = 0; s < substeps; ++s) {
        wind = wind_step(wind, cfg.wind, cfg.physics_dt, wind_rng);
        vehicle = step_dynamics(vehicle, cmd, wind, cfg, cfg.physics_dt);
      }
    }
    prev_pyr = std::move(pyr);
  }
  return telemetry;
}

}  // namespace flowhold
