#include "flowhold/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "flowhold/errors.hpp"

namespace flowhold {

void TrackerConfig::validate() const {
  detect.validate();
  lk.validate();
  if (min_alive < 1 || min_alive > detect.max_corners) {
    throw ConfigError("tracker.min_alive", "tracker.min_alive must be in [1, detect.max_corners]");
  }
}

int TrackerState::alive_count() const {
  return static_cast<int>(
      std::count_if(features.begin(), features.end(), [](const auto& f) { return f.alive; }));
}

const TrackedFeature* TrackerState::best() const {
  if (!best_id) return nullptr;
  for (const auto& f : features) {
    if (f.id == *best_id && f.alive) return &f;
  }
  return nullptr;
}

Rect center_roi(int width, int height) {
  if (width < 4 || height < 4) throw SizeError("center_roi needs at least a 4x4 image");
  return Rect{width / 4, height / 4, width / 2, height / 2};
}

std::optional<std::int64_t> select_best(const std::vector<TrackedFeature>& features, int width,
                                        int height) {
  const Point2 c = image_center(width, height);
  const TrackedFeature* best = nullptr;
  double best_dist = 0.0;
  for (const auto& f : features) {
    if (!f.alive) continue;
    const double dist = std::hypot(f.position.x - c.x, f.position.y - c.y);
    if (!best || f.init_response > best->init_response ||
        (f.init_response == best->init_response &&
         (dist < best_dist || (dist == best_dist && f.id < best->id)))) {
      best = &f;
      best_dist = dist;
    }
  }
  if (!best) return std::nullopt;
  return best->id;
}

TrackerState acquire(const GrayImage& image, const TrackerConfig& config,
                     const TrackerState& previous) {
  config.validate();
  TrackerState s;
  s.width = image.width();
  s.height = image.height();
  s.next_id = previous.next_id;
  s.generation = previous.generation + 1;

  const Rect roi = center_roi(image.width(), image.height());
  const double margin = config.lk.window_radius + 1;
  for (const auto& c : detect_corners(image, roi, config.detect)) {
    // Features must be trackable: keep the LK window inside the frame.
    if (c.x < margin || c.y < margin || c.x > image.width() - 1 - margin ||
        c.y > image.height() - 1 - margin) {
      continue;
    }
    TrackedFeature f;
    f.id = s.next_id++;
    f.position = {static_cast<double>(c.x), static_cast<double>(c.y)};
    f.init_response = c.response;
    s.features.push_back(f);
  }
  s.best_id = select_best(s.features, s.width, s.height);
  s.blind = s.features.empty();
  return s;
}

AdvanceResult advance(const TrackerState& state, const Pyramid& prev, const Pyramid& next,
                      const TrackerConfig& config) {
  config.validate();
  const auto& p0 = prev.levels.at(0);
  const auto& n0 = next.levels.at(0);
  if (p0.width() != n0.width() || p0.height() != n0.height()) {
    throw ArgumentError("advance: prev/next frame sizes differ");
  }
  if (state.width != 0 && (state.width != n0.width() || state.height != n0.height())) {
    throw ArgumentError("advance: frame size does not match tracker state");
  }

  AdvanceResult out;
  out.state = state;
  out.state.width = n0.width();
  out.state.height = n0.height();
  auto& s = out.state;

  for (auto& f : s.features) {
    if (!f.alive) continue;
    const auto r = lk_track(prev, next, f.position, config.lk);
    if (r.tracked()) {
      f.position = r.point;
      ++f.age;
    } else {
      f.alive = false;
      out.events.push_back({TrackerEventKind::FeatureLost, f.id, r.status});
    }
  }
  std::erase_if(s.features, [](const TrackedFeature& f) { return !f.alive; });

  if (!s.best() && !s.features.empty()) {
    s.best_id = select_best(s.features, s.width, s.height);
  } else if (s.features.empty()) {
    s.best_id.reset();
  }

  if (s.alive_count() < config.min_alive) {
    s = acquire(n0, config, s);
    out.events.push_back({TrackerEventKind::Reacquired});
  }
  s.blind = s.alive_count() == 0;
  if (s.blind && !state.blind) out.events.push_back({TrackerEventKind::Blind});
  return out;
}

AdvanceResult advance(const TrackerState& state, const GrayImage& prev, const GrayImage& next,
                      const TrackerConfig& config) {
  return advance(state, build_pyramid(prev, config.lk.pyramid_levels),
                 build_pyramid(next, config.lk.pyramid_levels), config);
}

std::optional<Displacement> best_displacement(const TrackerState& state, int width, int height) {
  const auto* best = state.best();
  if (!best) return std::nullopt;
  return displacement_from_center(best->position, width, height);
}

}  // namespace flowhold
