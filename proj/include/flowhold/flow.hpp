#pragma once

#include <string_view>
#include <vector>

#include "flowhold/imaging.hpp"

namespace flowhold {

/// Image pyramid; level 0 is full resolution, each level a 2x2 box average
/// of its parent. Gradients are precomputed per level for tracking.
struct Pyramid {
  std::vector<GrayImage> levels;
  std::vector<GradientField> gradients;

  size_t depth() const { return levels.size(); }
};

struct LkParams {
  int window_radius = 10;
  int pyramid_levels = 3;
  int max_iterations = 30;
  double epsilon = 0.01;
  double min_eigen_threshold = 1e-4;
  double residual_cap = 0.08;

  void validate() const;
};

enum class FlowStatus { Tracked, OutOfBounds, IllConditioned, Diverged, HighResidual };

std::string_view to_string(FlowStatus s);

struct FlowResult {
  Point2 point;
  FlowStatus status = FlowStatus::Tracked;
  double residual = 0.0;

  bool tracked() const { return status == FlowStatus::Tracked; }
};

/// Depth is reduced (never an error) so the deepest level stays >= 8x8;
/// sources already below 8x8 may halve down to 1x1.
Pyramid build_pyramid(const GrayImage& image, int levels);

/// Coarse-to-fine iterative Lucas-Kanade. Throws ArgumentError when `point`
/// is closer than window_radius+1 to a level-0 border of `prev`, or when
/// the pyramids disagree in size.
FlowResult lk_track(const Pyramid& prev, const Pyramid& next, Point2 point,
                    const LkParams& params);

}  // namespace flowhold
