#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace flowhold::fixture {

GrayImage square_on_black(int size, int lo, int hi) {
  std::vector<double> d(static_cast<size_t>(size) * size, 0.0);
  for (int y = lo; y <= hi; ++y) {
    for (int x = lo; x <= hi; ++x) d[static_cast<size_t>(y) * size + x] = 1.0;
  }
  return GrayImage(size, size, std::move(d));
}

GrayImage random_image(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> d(static_cast<size_t>(width) * height);
  for (auto& v : d) v = u(rng);
  return GrayImage(width, height, std::move(d));
}

GrayImage random_blocks(int width, int height, int cell, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int cw = (width + cell - 1) / cell;
  const int ch = (height + cell - 1) / cell;
  std::vector<double> levels(static_cast<size_t>(cw) * ch);
  for (auto& v : levels) v = u(rng);
  std::vector<double> d(static_cast<size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      d[static_cast<size_t>(y) * width + x] = levels[static_cast<size_t>(y / cell) * cw + x / cell];
    }
  }
  return GrayImage(width, height, std::move(d));
}

SmoothTexture::SmoothTexture(std::uint64_t seed, double extent, int blobs) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-16.0, extent + 16.0);
  std::uniform_real_distribution<double> sig(2.0, 4.0);
  std::uniform_real_distribution<double> amp(-0.35, 0.35);
  for (int i = 0; i < blobs; ++i) blobs_.push_back({pos(rng), pos(rng), sig(rng), amp(rng)});
}

double SmoothTexture::operator()(double x, double y) const {
  double v = 0.5;
  for (const auto& b : blobs_) {
    const double dx = x - b.x;
    const double dy = y - b.y;
    const double r2 = dx * dx + dy * dy;
    if (r2 > 25.0 * b.sigma * b.sigma) continue;
    v += b.amp * std::exp(-r2 / (2.0 * b.sigma * b.sigma));
  }
  return std::clamp(v, 0.0, 1.0);
}

GrayImage SmoothTexture::render(int width, int height, double shift_x, double shift_y,
                                double offset) const {
  std::vector<double> d(static_cast<size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      d[static_cast<size_t>(y) * width + x] =
          std::clamp((*this)(x - shift_x, y - shift_y) + offset, 0.0, 1.0);
    }
  }
  return GrayImage(width, height, std::move(d));
}

}  // namespace flowhold::fixture
