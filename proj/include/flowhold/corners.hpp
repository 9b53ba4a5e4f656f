#pragma once

#include <vector>

#include "flowhold/imaging.hpp"

namespace flowhold {

// Window-summed gradient products [a b; b c].
struct StructureTensor {
  double a = 0.0;  // sum ix^2
  double b = 0.0;  // sum ix*iy
  double c = 0.0;  // sum iy^2
};

struct Corner {
  int x = 0;
  int y = 0;
  double response = 0.0;

  friend bool operator==(const Corner&, const Corner&) = default;
};

struct DetectParams {
  int max_corners = 20;
  double quality_level = 0.05;
  double min_distance = 15.0;
  int window_radius = 2;

  // Throws ConfigError naming the first bad field.
  void validate() const;
};

/// Smaller eigenvalue of the tensor, clamped at zero.
double min_eigenvalue(const StructureTensor& t);

/// Per-pixel Shi-Tomasi response over a (2r+1)^2 window of Sobel gradients.
/// Throws SizeError if the image is smaller than (2r+3) on either side.
Raster response_map(const GrayImage& image, int window_radius);

/// Greedy corner selection inside `roi`, ordered by descending response
/// (ties: row-major). Candidates must exceed quality_level * max response
/// in the roi; each pick suppresses anything closer than min_distance.
std::vector<Corner> detect_corners(const GrayImage& image, const Rect& roi,
                                   const DetectParams& params);

namespace detail {
// Response of every pixel in `roi` given precomputed gradients; pixels
// outside the roi are left at zero.
Raster response_in_roi(const GradientField& grad, const Rect& roi, int window_radius);
}  // namespace detail

}  // namespace flowhold
