#include "flowhold/flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowhold/corners.hpp"
#include "flowhold/errors.hpp"

namespace flowhold {

void LkParams::validate() const {
  if (window_radius < 2) throw ConfigError("lk.window_radius", "lk.window_radius must be >= 2");
  if (pyramid_levels < 1) throw ConfigError("lk.pyramid_levels", "lk.pyramid_levels must be >= 1");
  if (max_iterations < 1) throw ConfigError("lk.max_iterations", "lk.max_iterations must be >= 1");
  if (!(epsilon > 0.0)) throw ConfigError("lk.epsilon", "lk.epsilon must be > 0");
  if (!(min_eigen_threshold > 0.0)) {
    throw ConfigError("lk.min_eigen_threshold", "lk.min_eigen_threshold must be > 0");
  }
  if (!(residual_cap > 0.0)) throw ConfigError("lk.residual_cap", "lk.residual_cap must be > 0");
}

std::string_view to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Tracked: return "Tracked";
    case FlowStatus::OutOfBounds: return "OutOfBounds";
    case FlowStatus::IllConditioned: return "IllConditioned";
    case FlowStatus::Diverged: return "Diverged";
    case FlowStatus::HighResidual: return "HighResidual";
  }
  return "Unknown";
}

namespace {

GrayImage downsample_box(const GrayImage& src) {
  const int w = src.width() / 2;
  const int h = src.height() / 2;
  std::vector<double> data(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double s = src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) +
                       src.at(2 * x, 2 * y + 1) + src.at(2 * x + 1, 2 * y + 1);
      data[static_cast<size_t>(y) * w + x] = std::min(0.25 * s, 1.0);
    }
  }
  return GrayImage(w, h, std::move(data));
}

// Level-L coordinate of a level-0 pixel position (pixel centers at integers).
double to_level(double v, int level) {
  const double scale = std::ldexp(1.0, -level);
  return (v + 0.5) * scale - 0.5;
}

bool window_inside(const Raster& r, double x, double y, int radius) {
  return x - radius >= 0.0 && y - radius >= 0.0 && x + radius <= r.width - 1 &&
         y + radius <= r.height - 1;
}

}  // namespace

Pyramid build_pyramid(const GrayImage& image, int levels) {
  Pyramid p;
  p.levels.push_back(image);
  const int min_side = (image.width() < 8 || image.height() < 8) ? 1 : 8;
  while (static_cast<int>(p.levels.size()) < levels) {
    const auto& top = p.levels.back();
    if (top.width() / 2 < min_side || top.height() / 2 < min_side) break;
    p.levels.push_back(downsample_box(top));
  }
  p.gradients.reserve(p.levels.size());
  for (const auto& level : p.levels) {
    p.gradients.push_back(detail::sobel_unchecked(level.raster()));
  }
  return p;
}

FlowResult lk_track(const Pyramid& prev, const Pyramid& next, Point2 point,
                    const LkParams& params) {
  params.validate();
  if (prev.depth() == 0 || next.depth() == 0) throw ArgumentError("lk_track: empty pyramid");
  const auto& base = prev.levels[0];
  if (base.width() != next.levels[0].width() || base.height() != next.levels[0].height()) {
    throw ArgumentError("lk_track: frame size mismatch");
  }
  const int r = params.window_radius;
  const double margin = r + 1;
  if (!(point.x >= margin && point.y >= margin && point.x <= base.width() - 1 - margin &&
        point.y <= base.height() - 1 - margin)) {
    throw ArgumentError("lk_track: point closer than window_radius+1 to the border");
  }

  const int side = 2 * r + 1;
  int top = static_cast<int>(std::min({prev.depth(), next.depth(),
                                        static_cast<size_t>(params.pyramid_levels)})) - 1;
  // Start at the deepest level that can hold a whole window.
  while (top > 0 && (prev.levels[top].width() < side || prev.levels[top].height() < side)) {
    --top;
  }

  const double n_pixels = static_cast<double>(side) * side;
  std::vector<double> tmpl(static_cast<size_t>(side) * side);
  std::vector<double> gx(tmpl.size());
  std::vector<double> gy(tmpl.size());

  FlowResult result;
  result.point = point;
  double guess_x = 0.0;
  double guess_y = 0.0;

  for (int level = top; level >= 0; --level) {
    const Raster& img0 = prev.levels[level].raster();
    const Raster& img1 = next.levels[level].raster();
    const GradientField& grad = prev.gradients[level];
    const double px = to_level(point.x, level);
    const double py = to_level(point.y, level);
    // Coarse levels only seed the estimate: they read replicated borders and
    // skip refinement where the window is flat. Level 0 is strict.
    const bool strict = level == 0;
    auto sample = [strict](const Raster& img, double x, double y) {
      if (!strict) {
        x = std::clamp(x, 0.0, img.width - 1.0);
        y = std::clamp(y, 0.0, img.height - 1.0);
      }
      return sample_bilinear_unchecked(img, x, y);
    };

    StructureTensor g;
    double sum_gx = 0.0;
    double sum_gy = 0.0;
    size_t k = 0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx, ++k) {
        const double sx = px + dx;
        const double sy = py + dy;
        tmpl[k] = sample(img0, sx, sy);
        gx[k] = sample(grad.ix, sx, sy);
        gy[k] = sample(grad.iy, sx, sy);
        g.a += gx[k] * gx[k];
        g.b += gx[k] * gy[k];
        g.c += gy[k] * gy[k];
        sum_gx += gx[k];
        sum_gy += gy[k];
      }
    }
    const double det = g.a * g.c - g.b * g.b;
    const bool ill = min_eigenvalue(g) / n_pixels < params.min_eigen_threshold ||
                     !(std::abs(det) > 0.0);
    if (ill && strict) {
      result.status = FlowStatus::IllConditioned;
      return result;
    }

    double vx = 0.0;
    double vy = 0.0;
    for (int it = 0; !ill && it < params.max_iterations; ++it) {
      const double qx = px + guess_x + vx;
      const double qy = py + guess_y + vy;
      if (strict && !window_inside(img1, qx, qy, r)) {
        result.status = FlowStatus::OutOfBounds;
        return result;
      }
      double ex = 0.0;
      double ey = 0.0;
      double sum_diff = 0.0;
      k = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx, ++k) {
          const double diff = tmpl[k] - sample(img1, qx + dx, qy + dy);
          ex += diff * gx[k];
          ey += diff * gy[k];
          sum_diff += diff;
        }
      }
      // Zero-mean temporal difference: a uniform brightness change between
      // frames does not bias the step.
      const double mean_diff = sum_diff / n_pixels;
      ex -= mean_diff * sum_gx;
      ey -= mean_diff * sum_gy;
      const double step_x = (g.c * ex - g.b * ey) / det;
      const double step_y = (g.a * ey - g.b * ex) / det;
      vx += step_x;
      vy += step_y;
      if (std::hypot(vx, vy) > side) {
        result.status = FlowStatus::Diverged;
        return result;
      }
      if (std::hypot(step_x, step_y) < params.epsilon) break;
    }

    if (level > 0) {
      guess_x = 2.0 * (guess_x + vx);
      guess_y = 2.0 * (guess_y + vy);
    } else {
      guess_x += vx;
      guess_y += vy;
    }
  }

  result.point = Point2{point.x + guess_x, point.y + guess_y};
  if (!(result.point.x >= margin && result.point.y >= margin &&
        result.point.x <= base.width() - 1 - margin &&
        result.point.y <= base.height() - 1 - margin)) {
    result.status = FlowStatus::OutOfBounds;
    return result;
  }

  const Raster& img0 = prev.levels[0].raster();
  const Raster& img1 = next.levels[0].raster();
  double sad = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      sad += std::abs(sample_bilinear_unchecked(img0, point.x + dx, point.y + dy) -
                      sample_bilinear_unchecked(img1, result.point.x + dx, result.point.y + dy));
    }
  }
  result.residual = sad / n_pixels;
  if (result.residual > params.residual_cap) result.status = FlowStatus::HighResidual;
  return result;
}

}  // namespace flowhold
