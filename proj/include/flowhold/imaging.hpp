#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flowhold {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned integer rectangle, half-open: [x, x+width) x [y, y+height).
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool empty() const { return width <= 0 || height <= 0; }
  bool contains(double px, double py) const {
    return px >= x && py >= y && px < x + width && py < y + height;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

// Row-major raster of unconstrained reals (gradients, responses).
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Raster() = default;
  Raster(int w, int h, double fill = 0.0);

  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
};

/// Grayscale image with intensities normalized to [0, 1].
///
/// The constructor enforces the size and range invariants; once built the
/// image is immutable.
class GrayImage {
 public:
  GrayImage(int width, int height, std::vector<double> data);
  static GrayImage filled(int width, int height, double value);

  int width() const { return raster_.width; }
  int height() const { return raster_.height; }
  double at(int x, int y) const { return raster_.at(x, y); }
  std::span<const double> pixels() const { return raster_.data; }
  const Raster& raster() const { return raster_; }

  friend bool operator==(const GrayImage& a, const GrayImage& b) {
    return a.width() == b.width() && a.height() == b.height() &&
           a.raster_.data == b.raster_.data;
  }

 private:
  Raster raster_;
};

struct GradientField {
  Raster ix;
  Raster iy;
};

/// Parses a binary (P5) PGM. Throws ParseError naming the bad field
/// ("magic", "width", "height", "maxval", "payload").
GrayImage load_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> save_pgm(const GrayImage& image);

GrayImage read_pgm_file(const std::string& path);
void write_pgm_file(const std::string& path, const GrayImage& image);

/// Bilinear sample at a sub-pixel location; exact at lattice points.
/// Throws RangeError outside [0, w-1] x [0, h-1].
double sample_bilinear(const GrayImage& image, double x, double y);
double sample_bilinear(const Raster& raster, double x, double y);

// No range checks; caller guarantees 0 <= x <= w-1, 0 <= y <= h-1.
inline double sample_bilinear_unchecked(const Raster& r, double x, double y) {
  int x0 = static_cast<int>(x);
  int y0 = static_cast<int>(y);
  if (x0 > r.width - 2) x0 = r.width > 1 ? r.width - 2 : 0;
  if (y0 > r.height - 2) y0 = r.height > 1 ? r.height - 2 : 0;
  const double fx = x - x0;
  const double fy = y - y0;
  const int x1 = r.width > 1 ? x0 + 1 : x0;
  const int y1 = r.height > 1 ? y0 + 1 : y0;
  const double top = (1.0 - fx) * r.at(x0, y0) + fx * r.at(x1, y0);
  const double bottom = (1.0 - fx) * r.at(x0, y1) + fx * r.at(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

/// 3x3 Sobel derivatives scaled by 1/8 (unit ramp -> 1.0), edge-replicated
/// borders. Throws SizeError below 3x3.
GradientField sobel_gradients(const GrayImage& image);

namespace detail {
// Same kernel without the minimum-size check (pyramid levels may be tiny).
GradientField sobel_unchecked(const Raster& image);
}  // namespace detail

}  // namespace flowhold
