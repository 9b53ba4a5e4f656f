#include "flowhold/corners.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowhold/errors.hpp"

namespace flowhold {

void DetectParams::validate() const {
  if (max_corners < 1) throw ConfigError("detect.max_corners", "detect.max_corners must be >= 1");
  if (!(quality_level > 0.0 && quality_level <= 1.0)) {
    throw ConfigError("detect.quality_level", "detect.quality_level must be in (0, 1]");
  }
  if (!(min_distance >= 0.0)) {
    throw ConfigError("detect.min_distance", "detect.min_distance must be >= 0");
  }
  if (window_radius < 1) {
    throw ConfigError("detect.window_radius", "detect.window_radius must be >= 1");
  }
}

double min_eigenvalue(const StructureTensor& t) {
  const double half_trace = 0.5 * (t.a + t.c);
  const double half_diff = 0.5 * (t.a - t.c);
  const double lambda = half_trace - std::sqrt(half_diff * half_diff + t.b * t.b);
  return lambda > 0.0 ? lambda : 0.0;
}

namespace detail {

Raster response_in_roi(const GradientField& grad, const Rect& roi, int r) {
  const int w = grad.ix.width;
  const int h = grad.ix.height;
  Raster out(w, h);
  for (int y = roi.y; y < roi.y + roi.height; ++y) {
    for (int x = roi.x; x < roi.x + roi.width; ++x) {
      StructureTensor t;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = std::clamp(x + dx, 0, w - 1);
          const double gx = grad.ix.at(xx, yy);
          const double gy = grad.iy.at(xx, yy);
          t.a += gx * gx;
          t.b += gx * gy;
          t.c += gy * gy;
        }
      }
      out.at(x, y) = min_eigenvalue(t);
    }
  }
  return out;
}

}  // namespace detail

Raster response_map(const GrayImage& image, int window_radius) {
  if (window_radius < 1) throw ArgumentError("window_radius must be >= 1");
  const int need = 2 * window_radius + 3;
  if (image.width() < need || image.height() < need) {
    throw SizeError("response_map needs at least a " + std::to_string(need) + "x" +
                    std::to_string(need) + " image");
  }
  const auto grad = detail::sobel_unchecked(image.raster());
  return detail::response_in_roi(grad, Rect{0, 0, image.width(), image.height()},
                                 window_radius);
}

std::vector<Corner> detect_corners(const GrayImage& image, const Rect& roi,
                                   const DetectParams& params) {
  params.validate();
  if (roi.empty()) throw ArgumentError("detect_corners: empty roi");
  if (roi.x < 0 || roi.y < 0 || roi.x + roi.width > image.width() ||
      roi.y + roi.height > image.height()) {
    throw ArgumentError("detect_corners: roi not inside image");
  }
  const auto grad = detail::sobel_unchecked(image.raster());
  const Raster resp = detail::response_in_roi(grad, roi, params.window_radius);

  double max_response = 0.0;
  for (int y = roi.y; y < roi.y + roi.height; ++y) {
    for (int x = roi.x; x < roi.x + roi.width; ++x) {
      max_response = std::max(max_response, resp.at(x, y));
    }
  }
  const double threshold = params.quality_level * max_response;

  std::vector<Corner> candidates;
  for (int y = roi.y; y < roi.y + roi.height; ++y) {
    for (int x = roi.x; x < roi.x + roi.width; ++x) {
      const double v = resp.at(x, y);
      if (v > threshold) candidates.push_back({x, y, v});
    }
  }
  // Row-major generation order plus a stable sort gives the tie-break.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Corner& a, const Corner& b) { return a.response > b.response; });

  std::vector<Corner> picked;
  const double min_d2 = params.min_distance * params.min_distance;
  for (const auto& c : candidates) {
    if (static_cast<int>(picked.size()) >= params.max_corners) break;
    const bool too_close = std::any_of(picked.begin(), picked.end(), [&](const Corner& p) {
      const double dx = p.x - c.x;
      const double dy = p.y - c.y;
      return dx * dx + dy * dy < min_d2;
    });
    if (!too_close) picked.push_back(c);
  }
  return picked;
}

}  // namespace flowhold
