#pragma once

#include <span>
#include <vector>

#include "facedyn/core.hpp"

namespace facedyn {

// Linear Eulerian magnification settings.
struct MagnifyParams {
  double alpha = 10.0;     // amplification factor
  double f_lo = 0.4;       // Hz
  double f_hi = 3.0;       // Hz
  int levels = 4;          // pyramid depth, residual included
  double lambda_c = 16.0;  // spatial wavelength cutoff, px

  void validate(double fps) const;  // throws ConfigError
};

// levels - 1 band-pass images followed by the low-pass residual.
struct LaplacianPyramid {
  std::vector<Plane> bands;
};

LaplacianPyramid build_pyramid(const Plane& image, int levels);
Plane reconstruct(const LaplacianPyramid& pyramid);

// Ideal band-pass over the whole series: zero every DFT bin whose |frequency|
// lies outside [f_lo, f_hi] and return the real part of the inverse.
std::vector<double> temporal_bandpass(std::span<const double> series, double f_lo, double f_hi, double fps);

// Nominal wavelength carried by a pyramid level: 2 px at level 0, doubling per level.
double level_wavelength(int level);
// min(alpha, alpha * wavelength / lambda_c)
double level_gain(const MagnifyParams& params, int level);

VideoSequence magnify_sequence(const VideoSequence& video, const MagnifyParams& params);

}  // namespace facedyn
