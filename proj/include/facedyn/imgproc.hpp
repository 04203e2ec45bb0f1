#pragma once

#include <span>
#include <vector>

#include "facedyn/core.hpp"

// Small filtering toolbox shared by the tracking, magnification and feature
// stages. Borders are edge-clamped everywhere.
namespace facedyn::imgproc {

// Normalized sampled Gaussian of the given odd size.
std::vector<double> gaussian_kernel(int size, double sigma);

// 5-tap binomial [1 4 6 4 1] / 16.
std::span<const double> binomial5();

// Correlates rows with kx, then columns with ky (both centered, odd length).
Plane separable_filter(const Plane& src, std::span<const double> kx, std::span<const double> ky);

Plane gaussian_blur(const Plane& src, int size, double sigma);
Plane box_filter(const Plane& src, int size);

// Central differences (I(x+1) - I(x-1)) / 2.
Plane gradient_x(const Plane& src);
Plane gradient_y(const Plane& src);

// 3x3 Sobel derivatives (unnormalized, weights 1 2 1 / -1 0 1).
Plane sobel_x(const Plane& src);
Plane sobel_y(const Plane& src);

// Blur with the binomial kernel and keep every second sample: (w+1)/2 x (h+1)/2.
Plane pyr_down(const Plane& src);
// Zero-insert to (out_w, out_h) and interpolate with 2x the binomial kernel.
Plane pyr_up(const Plane& src, int out_w, int out_h);

// Bilinear resize with pixel-center alignment.
Plane resize_bilinear(const Plane& src, int out_w, int out_h);

}  // namespace facedyn::imgproc
