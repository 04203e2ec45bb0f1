#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "facedyn/core.hpp"

// Analytic test images. Everything is generated from closed-form functions so
// that translated or rotated copies are exact rather than resampled.
namespace fixtures {

// Band-limited random texture: 0.5 + sum of random low-frequency sinusoids,
// scaled to stay inside [0.1, 0.9].
class SmoothTexture {
 public:
  explicit SmoothTexture(std::uint32_t seed, int components = 12, double max_freq = 0.35);
  double operator()(double x, double y) const;

 private:
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves_;
  double scale_ = 1.0;
};

facedyn::Frame render(int w, int h, const std::function<double(double, double)>& f);

facedyn::Frame constant_frame(int w, int h, float value);
// squares x squares board of `square`-pixel cells, top-left cell dark.
facedyn::Frame checkerboard(int squares, int square);

// Isotropic Gaussian bump on a flat background.
double gaussian_blob(double x, double y, double cx, double cy, double sigma, double amplitude, double background);

// Mean of |a - b| over pixels at least `margin` away from the border.
double interior_mean_abs_diff(const facedyn::Plane& a, const facedyn::Plane& b, int margin);
double interior_max_abs_diff(const facedyn::Plane& a, const facedyn::Plane& b, int margin);

}  // namespace fixtures
