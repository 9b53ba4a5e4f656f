#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "flowhold/control.hpp"
#include "flowhold/corners.hpp"
#include "flowhold/flow.hpp"
#include "flowhold/imaging.hpp"

namespace flowhold {

struct TrackedFeature {
  std::int64_t id = 0;
  Point2 position;
  double init_response = 0.0;
  int age = 0;
  bool alive = true;
};

struct TrackerConfig {
  DetectParams detect;
  LkParams lk;
  int min_alive = 5;

  void validate() const;
};

struct TrackerState {
  std::vector<TrackedFeature> features;
  std::optional<std::int64_t> best_id;
  int generation = 0;
  bool blind = true;
  int width = 0;
  int height = 0;
  std::int64_t next_id = 0;

  int alive_count() const;
  const TrackedFeature* best() const;
};

enum class TrackerEventKind { FeatureLost, Reacquired, Blind };

struct TrackerEvent {
  TrackerEventKind kind;
  std::int64_t feature_id = -1;  // FeatureLost only
  FlowStatus reason = FlowStatus::Tracked;
};

struct AdvanceResult {
  TrackerState state;
  std::vector<TrackerEvent> events;
};

/// Central half of the frame along each axis. Throws SizeError below 4x4.
Rect center_roi(int width, int height);

/// Best feature among the alive ones: highest init_response, then closest
/// to the image center, then lowest id.
std::optional<std::int64_t> select_best(const std::vector<TrackedFeature>& features, int width,
                                        int height);

/// Detects a fresh feature set in the center roi. `previous` carries id and
/// generation counters across re-acquisitions.
TrackerState acquire(const GrayImage& image, const TrackerConfig& config,
                     const TrackerState& previous = {});

/// Tracks alive features prev -> next and re-acquires on `next` when fewer
/// than min_alive survive. Throws ArgumentError on a frame-size mismatch.
AdvanceResult advance(const TrackerState& state, const GrayImage& prev, const GrayImage& next,
                      const TrackerConfig& config);

// Same, reusing pyramids the caller already built.
AdvanceResult advance(const TrackerState& state, const Pyramid& prev, const Pyramid& next,
                      const TrackerConfig& config);

/// Displacement of the best feature, or nullopt when blind.
std::optional<Displacement> best_displacement(const TrackerState& state, int width, int height);

}  // namespace flowhold
