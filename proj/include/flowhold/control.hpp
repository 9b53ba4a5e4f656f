#pragma once

#include <optional>

#include "flowhold/imaging.hpp"

namespace flowhold {

/// Signed offset of a tracked feature from the image center, in pixels.
/// x < 0 left of center, y < 0 above center; d is the Euclidean norm.
struct Displacement {
  double x = 0.0;
  double y = 0.0;
  double d = 0.0;
};

enum class CenterConvention {
  Integer,    // (w/2, h/2)
  Geometric,  // ((w-1)/2, (h-1)/2)
};

Point2 image_center(int width, int height, CenterConvention convention = CenterConvention::Integer);

/// Throws ArgumentError when the feature lies outside [0,w-1] x [0,h-1].
Displacement displacement_from_center(Point2 feature, int width, int height,
                                      CenterConvention convention = CenterConvention::Integer);

struct PidGains {
  double kp = 8e-4;      // rad / px
  double ki = 2e-4;      // rad / (px s)
  double kd = 9e-4;      // rad / (px/s)
  double i_limit = 400;  // px s
  double out_limit = 0.2;  // rad

  // `prefix` is prepended to field names in ConfigError, e.g. "gains.roll".
  void validate(const char* prefix = "gains") const;
};

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
  bool primed = false;
};

struct PidOutput {
  double output = 0.0;
  PidState state;
};

/// One discrete step: rectangular integral with anti-windup clamp,
/// backward-difference derivative (zero when unprimed), clamped output.
/// Throws ArgumentError for dt <= 0.
PidOutput pid_step(const PidGains& gains, const PidState& state, double error, double dt);

/// Next step's derivative term is zero; the integral is kept.
PidState reset_derivative(PidState state);

struct AttitudeCommand {
  double pitch = 0.0;  // drives body Y
  double roll = 0.0;   // drives body X
};

struct AxisGains {
  PidGains roll;
  PidGains pitch;
};

struct ControllerState {
  PidState roll;
  PidState pitch;
};

/// Image x error feeds the roll PID, image y error the pitch PID. A blind
/// input (nullopt) yields a neutral command, leaves both integrals untouched
/// and unprimes the derivative so re-entry does not kick.
AttitudeCommand position_hold_step(ControllerState& ctrl, const AxisGains& gains,
                                   const std::optional<Displacement>& displacement, double dt);

}  // namespace flowhold
