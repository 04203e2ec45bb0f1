#include "facedyn/imgproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace facedyn::imgproc {

std::vector<double> gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw DimensionError("gaussian kernel size must be odd and positive");
  std::vector<double> k(size);
  const int r = size / 2;
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  return k;
}

std::span<const double> binomial5() {
  static constexpr std::array<double, 5> k{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  return k;
}

Plane separable_filter(const Plane& src, std::span<const double> kx, std::span<const double> ky) {
  const int w = src.width(), h = src.height();
  const int rx = static_cast<int>(kx.size()) / 2, ry = static_cast<int>(ky.size()) / 2;
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -rx; i <= rx; ++i) acc += kx[i + rx] * src.clamped(x + i, y);
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = -ry; j <= ry; ++j) {
        const int yy = std::clamp(y + j, 0, h - 1);
        acc += ky[j + ry] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

Plane gaussian_blur(const Plane& src, int size, double sigma) {
  const auto k = gaussian_kernel(size, sigma);
  return separable_filter(src, k, k);
}

Plane box_filter(const Plane& src, int size) {
  std::vector<double> k(size, 1.0 / size);
  return separable_filter(src, k, k);
}

Plane gradient_x(const Plane& src) {
  Plane out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) out(x, y) = 0.5f * (src.clamped(x + 1, y) - src.clamped(x - 1, y));
  return out;
}

Plane gradient_y(const Plane& src) {
  Plane out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) out(x, y) = 0.5f * (src.clamped(x, y + 1) - src.clamped(x, y - 1));
  return out;
}

Plane sobel_x(const Plane& src) {
  static constexpr std::array<double, 3> deriv{-1.0, 0.0, 1.0};
  static constexpr std::array<double, 3> smooth{1.0, 2.0, 1.0};
  return separable_filter(src, deriv, smooth);
}

Plane sobel_y(const Plane& src) {
  static constexpr std::array<double, 3> deriv{-1.0, 0.0, 1.0};
  static constexpr std::array<double, 3> smooth{1.0, 2.0, 1.0};
  return separable_filter(src, smooth, deriv);
}

Plane pyr_down(const Plane& src) {
  const Plane blurred = separable_filter(src, binomial5(), binomial5());
  const int w = (src.width() + 1) / 2, h = (src.height() + 1) / 2;
  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = blurred(2 * x, 2 * y);
  return out;
}

Plane pyr_up(const Plane& src, int out_w, int out_h) {
  // Polyphase form of zero insertion followed by 2 * binomial5 filtering:
  // even outputs use taps (1 6 1)/8, odd outputs use (4 4)/8.
  std::vector<double> tmp(static_cast<std::size_t>(out_w) * src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < out_w; ++x) {
      double v;
      if (x % 2 == 0) {
        const int i = x / 2;
        v = (src.clamped(i - 1, y) + 6.0 * src.clamped(i, y) + src.clamped(i + 1, y)) / 8.0;
      } else {
        const int i = x / 2;
        v = (4.0 * src.clamped(i, y) + 4.0 * src.clamped(i + 1, y)) / 8.0;
      }
      tmp[static_cast<std::size_t>(y) * out_w + x] = v;
    }
  }
  auto at = [&](int x, int y) { return tmp[static_cast<std::size_t>(std::clamp(y, 0, src.height() - 1)) * out_w + x]; };
  Plane out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    const int j = y / 2;
    for (int x = 0; x < out_w; ++x) {
      const double v = (y % 2 == 0) ? (at(x, j - 1) + 6.0 * at(x, j) + at(x, j + 1)) / 8.0
                                    : (4.0 * at(x, j) + 4.0 * at(x, j + 1)) / 8.0;
      out(x, y) = static_cast<float>(v);
    }
  }
  return out;
}

Plane resize_bilinear(const Plane& src, int out_w, int out_h) {
  Plane out(out_w, out_h);
  const double sx = static_cast<double>(src.width()) / out_w;
  const double sy = static_cast<double>(src.height()) / out_h;
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x)
      out(x, y) = static_cast<float>(src.sample((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5));
  return out;
}

}  // namespace facedyn::imgproc
