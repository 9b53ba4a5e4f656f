#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowhold {

struct EventFlags {
  bool reacquired = false;
  bool feature_lost = false;
  bool blind = false;

  friend bool operator==(const EventFlags&, const EventFlags&) = default;
};

/// One camera tick of a flight.
struct FrameRecord {
  double t = 0.0;
  double pos_x = 0.0;
  double pos_y = 0.0;
  double vel_x = 0.0;
  double vel_y = 0.0;
  std::optional<double> disp_x;
  std::optional<double> disp_y;
  std::optional<double> disp_d;
  double cmd_roll = 0.0;
  double cmd_pitch = 0.0;
  int n_alive = 0;
  int generation = 0;
  EventFlags events;
};

struct DispersionReport {
  double mean_x = 0.0;  // m
  double mean_y = 0.0;  // m
  double std_x = 0.0;   // m
  double std_y = 0.0;   // m
  double two_sigma_radial = 0.0;  // cm
  double max_excursion = 0.0;     // cm
  double hold_diameter = 0.0;     // cm
  double settle_time_used = 0.0;  // s
  double blind_fraction = 0.0;
};

// Identifies the run a summary belongs to.
struct ConfigDigest {
  std::string preset;
  std::uint64_t texture_seed = 0;
  std::uint64_t wind_seed = 0;
  std::uint64_t noise_seed = 0;
};

/// Airframe size plus the 2-sigma band on both sides.
double hold_diameter_cm(double two_sigma_radial_cm, double frame_size_cm);

/// Population statistics over records with t >= settle_time. Throws
/// ArgumentError when fewer than two records qualify.
DispersionReport dispersion_stats(const std::vector<FrameRecord>& records, double settle_time,
                                  double frame_size_cm);

inline constexpr std::string_view kCsvHeader =
    "t,pos_x,pos_y,vel_x,vel_y,disp_x,disp_y,disp_d,cmd_roll,cmd_pitch,n_alive,generation,events";

std::string write_csv(const std::vector<FrameRecord>& records);

/// Parses a telemetry CSV; throws ParseError with "row N, column M" in the
/// message and the column name as field.
std::vector<FrameRecord> read_csv(std::string_view text);

/// Single JSON object with a fixed key order, newline-terminated.
std::string write_summary_json(const DispersionReport& report, const ConfigDigest& digest);

}  // namespace flowhold
