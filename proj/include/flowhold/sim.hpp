#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "flowhold/control.hpp"
#include "flowhold/imaging.hpp"
#include "flowhold/telemetry.hpp"
#include "flowhold/tracker.hpp"

namespace flowhold {

struct WindParams {
  double sigma = 0.0;  // m/s^2 per sqrt(s)
  double rate = 1.0;   // 1/s mean reversion
};

struct LowLightParams {
  double gain = 1.0;
  double noise = 0.0;  // per-pixel Gaussian sigma, intensity units
};

// World-frame rectangle (meters) rendered as uniform 0.5 when blank_ground is on.
struct BlankRect {
  double x0 = -50.0;
  double y0 = -50.0;
  double x1 = 50.0;
  double y1 = 50.0;
};

struct SimConfig {
  double physics_dt = 0.005;
  double camera_rate = 25.0;
  double altitude = 1.0;
  double focal_px = 500.0;
  int width = 640;
  int height = 480;
  double tilt_tau = 0.15;
  double drag_coeff = 0.35;
  double gravity = 9.81;
  double max_tilt = 0.2;
  WindParams wind;
  LowLightParams lowlight;
  double yaw_rate = 0.0;
  std::uint64_t texture_seed = 1;
  std::uint64_t wind_seed = 2;
  std::uint64_t noise_seed = 3;
  double cell_size = 0.05;
  bool anchor_marker = true;
  bool blank_ground = false;
  BlankRect blank_rect;
  double duration = 300.0;
  double frame_size_cm = 58.0;
  double settle_time = 5.0;
  double initial_x = 0.0;
  double initial_y = 0.0;

  /// Throws ConfigError("sim.<field>") on the first violated constraint,
  /// including physics_dt not dividing the frame interval.
  void validate() const;
  int substeps_per_frame() const;
  double frame_interval() const { return 1.0 / camera_rate; }
  std::size_t record_count() const;
  double ground_sample_distance() const { return altitude / focal_px; }
};

/// Piecewise-constant hashed-cell ground plane.
struct GroundTexture {
  std::uint64_t seed = 1;
  double cell_size = 0.05;
  // Forces the four cells around the world origin into a 0/1 checker, the
  // strongest corner the texture can produce.
  bool anchor_marker = false;
  bool blank_ground = false;
  BlankRect blank_rect;

  static GroundTexture from_config(const SimConfig& cfg);
  double cell_value(std::int64_t i, std::int64_t j) const;
};

double texture_at(const GroundTexture& tex, double x, double y);

struct VehicleState {
  Point2 pos;
  Point2 vel;
  Point2 tilt;  // x: roll axis, y: pitch axis
  double yaw = 0.0;
  double t = 0.0;
};

struct WindState {
  Point2 accel;
};

// Seeded Gaussian stream; one per disturbance source.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double next() { return dist_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_;
};

/// Nadir pinhole render. Each pixel is the area average of the texture over
/// its ground footprint; low-light gain and noise are applied afterwards,
/// drawing from `noise` only when the noise sigma is non-zero.
GrayImage render_frame(const GroundTexture& tex, const VehicleState& vehicle,
                       const SimConfig& cfg, NormalStream& noise);

WindState wind_step(const WindState& w, const WindParams& params, double dt, NormalStream& rng);

/// Semi-implicit Euler step of the planar point-mass model.
VehicleState step_dynamics(const VehicleState& v, const AttitudeCommand& cmd,
                           const WindState& wind, const SimConfig& cfg, double dt);

// Everything visible to an observer at one camera tick.
struct TickView {
  const FrameRecord& record;
  const VehicleState& vehicle;
  const ControllerState& controller;
  const TrackerState& tracker;
  const std::vector<TrackerEvent>& events;
};

using TickObserver = std::function<void(const TickView&)>;

struct Telemetry {
  std::vector<FrameRecord> records;
};

/// Closed-loop flight: render -> track -> displacement -> PID -> physics
/// substeps with the command held. Deterministic for a given config.
Telemetry run_episode(const SimConfig& cfg, const AxisGains& gains,
                      const TrackerConfig& tracker_cfg, const TickObserver& observer = {});

}  // namespace flowhold
