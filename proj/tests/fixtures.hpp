#pragma once

#include <cstdint>
#include <vector>

#include "flowhold/imaging.hpp"

namespace flowhold::fixture {

// White square [lo, hi] x [lo, hi] on black.
GrayImage square_on_black(int size, int lo, int hi);

// Uniform noise image from a seeded engine.
GrayImage random_image(int width, int height, std::uint64_t seed);

// Blocky random fixture: constant cells of `cell` px with random levels.
GrayImage random_blocks(int width, int height, int cell, std::uint64_t seed);

/// Smooth analytic texture (sum of Gaussian blobs) that can be sampled at
/// any real position, so translated frames have exact ground truth.
class SmoothTexture {
 public:
  explicit SmoothTexture(std::uint64_t seed, double extent = 256.0, int blobs = 900);
  double operator()(double x, double y) const;

  // Frame whose pixel (u, v) shows the texture at (u - shift_x, v - shift_y):
  // content moves by +shift between a zero-shift frame and this one.
  GrayImage render(int width, int height, double shift_x = 0.0, double shift_y = 0.0,
                   double offset = 0.0) const;

 private:
  struct Blob {
    double x, y, sigma, amp;
  };
  std::vector<Blob> blobs_;
};

}  // namespace flowhold::fixture
