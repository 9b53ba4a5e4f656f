#include "flowhold/control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowhold/errors.hpp"

namespace flowhold {

Point2 image_center(int width, int height, CenterConvention convention) {
  if (convention == CenterConvention::Integer) {
    return {static_cast<double>(width / 2), static_cast<double>(height / 2)};
  }
  return {(width - 1) / 2.0, (height - 1) / 2.0};
}

Displacement displacement_from_center(Point2 feature, int width, int height,
                                      CenterConvention convention) {
  if (!(feature.x >= 0.0 && feature.y >= 0.0 && feature.x <= width - 1 &&
        feature.y <= height - 1)) {
    throw ArgumentError("feature outside image bounds");
  }
  const Point2 c = image_center(width, height, convention);
  Displacement d;
  d.x = feature.x - c.x;
  d.y = feature.y - c.y;
  d.d = std::sqrt(d.x * d.x + d.y * d.y);
  return d;
}

void PidGains::validate(const char* prefix) const {
  const std::string p(prefix);
  auto check = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError(p + "." + name, p + "." + name + " must be finite and >= 0");
    }
  };
  check(kp, "kp");
  check(ki, "ki");
  check(kd, "kd");
  check(i_limit, "i_limit");
  check(out_limit, "out_limit");
  if (!(out_limit > 0.0)) throw ConfigError(p + ".out_limit", p + ".out_limit must be > 0");
}

PidOutput pid_step(const PidGains& gains, const PidState& state, double error, double dt) {
  if (!(dt > 0.0)) throw ArgumentError("pid_step: dt must be > 0");
  PidOutput out;
  out.state.integral = std::clamp(state.integral + error * dt, -gains.i_limit, gains.i_limit);
  const double derivative = state.primed ? (error - state.prev_error) / dt : 0.0;
  const double raw = gains.kp * error + gains.ki * out.state.integral + gains.kd * derivative;
  out.output = std::clamp(raw, -gains.out_limit, gains.out_limit);
  out.state.prev_error = error;
  out.state.primed = true;
  return out;
}

PidState reset_derivative(PidState state) {
  state.primed = false;
  return state;
}

AttitudeCommand position_hold_step(ControllerState& ctrl, const AxisGains& gains,
                                   const std::optional<Displacement>& displacement, double dt) {
  if (!(dt > 0.0)) throw ArgumentError("position_hold_step: dt must be > 0");
  if (!displacement) {
    ctrl.roll = reset_derivative(ctrl.roll);
    ctrl.pitch = reset_derivative(ctrl.pitch);
    return {};
  }
  const auto roll = pid_step(gains.roll, ctrl.roll, displacement->x, dt);
  const auto pitch = pid_step(gains.pitch, ctrl.pitch, displacement->y, dt);
  ctrl.roll = roll.state;
  ctrl.pitch = pitch.state;
  return {pitch.output, roll.output};
}

}  // namespace flowhold
