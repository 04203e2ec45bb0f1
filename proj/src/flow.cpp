#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>

#include "facedyn/features.hpp"
#include "facedyn/imgproc.hpp"

namespace facedyn {

void FlowParams::validate() const {
  if (pyramid_levels < 1) throw ConfigError("flow pyramid_levels must be >= 1");
  if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0)) throw ConfigError("flow pyramid_scale must lie in (0, 1)");
  if (poly_n < 3 || poly_n % 2 == 0) throw ConfigError("flow poly_n must be odd and >= 3");
  if (!(poly_sigma > 0.0)) throw ConfigError("flow poly_sigma must be positive");
  if (iterations < 1) throw ConfigError("flow iterations must be >= 1");
  if (avg_window < 1) throw ConfigError("flow avg_window must be >= 1");
}

namespace {

// Per-pixel quadratic model f(p + q) ~ q'Aq + b'q + c with A = [a11 a12; a12 a22].
struct Expansion {
  int w = 0, h = 0;
  std::vector<std::array<double, 5>> px;  // b1, b2, a11, a22, a12
};

Expansion poly_expand(const Plane& img, int poly_n, double sigma) {
  const int r = poly_n / 2, w = img.width(), h = img.height();
  std::vector<double> g(poly_n);
  for (int k = -r; k <= r; ++k) g[k + r] = std::exp(-0.5 * k * k / (sigma * sigma));

  // Weighted normal equations of the basis (1, x, y, x^2, y^2, xy).
  Eigen::Matrix<double, 6, 6> gram = Eigen::Matrix<double, 6, 6>::Zero();
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x) {
      Eigen::Matrix<double, 6, 1> b;
      b << 1, x, y, x * x, y * y, x * y;
      gram += g[x + r] * g[y + r] * b * b.transpose();
    }
  const Eigen::Matrix<double, 6, 6> inv = gram.inverse();

  // Row pass: moments of order 0..2 in x.
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::array<double, 3>> row(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::array<double, 3> m{0, 0, 0};
      for (int k = -r; k <= r; ++k) {
        const double v = g[k + r] * img.clamped(x + k, y);
        m[0] += v;
        m[1] += v * k;
        m[2] += v * k * k;
      }
      row[static_cast<std::size_t>(y) * w + x] = m;
    }

  Expansion e{w, h, std::vector<std::array<double, 5>>(n)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Eigen::Matrix<double, 6, 1> m = Eigen::Matrix<double, 6, 1>::Zero();
      for (int k = -r; k <= r; ++k) {
        const auto& rm = row[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
        const double gk = g[k + r];
        m(0) += gk * rm[0];
        m(1) += gk * rm[1];
        m(2) += gk * k * rm[0];
        m(3) += gk * rm[2];
        m(4) += gk * k * k * rm[0];
        m(5) += gk * k * rm[1];
      }
      const Eigen::Matrix<double, 6, 1> c = inv * m;
      e.px[static_cast<std::size_t>(y) * w + x] = {c(1), c(2), c(3), c(4), 0.5 * c(5)};
    }
  return e;
}

std::array<double, 5> sample_expansion(const Expansion& e, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, e.w - 1), y1 = std::min(y0 + 1, e.h - 1);
  const double fx = x - x0, fy = y - y0;
  const auto& p00 = e.px[static_cast<std::size_t>(y0) * e.w + x0];
  const auto& p10 = e.px[static_cast<std::size_t>(y0) * e.w + x1];
  const auto& p01 = e.px[static_cast<std::size_t>(y1) * e.w + x0];
  const auto& p11 = e.px[static_cast<std::size_t>(y1) * e.w + x1];
  std::array<double, 5> out;
  for (int i = 0; i < 5; ++i)
    out[i] = (1 - fy) * ((1 - fx) * p00[i] + fx * p10[i]) + fy * ((1 - fx) * p01[i] + fx * p11[i]);
  return out;
}

using Planes5 = std::array<std::vector<double>, 5>;

// Normal-equation terms (A'A, A'db) of every pixel under the current flow.
Planes5 update_matrices(const Expansion& e0, const Expansion& e1, const FlowField& flow) {
  static constexpr double kBorder[5] = {0.14, 0.14, 0.4472, 0.4472, 0.4472};
  const int w = e0.w, h = e0.h;
  Planes5 m;
  for (auto& p : m) p.assign(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double dx = flow.data[2 * i], dy = flow.data[2 * i + 1];
      const double fx = x + dx, fy = y + dy;
      if (!(fx >= 0.0 && fy >= 0.0 && fx <= w - 1 && fy <= h - 1)) continue;
      const auto& r0 = e0.px[i];
      const auto r1 = sample_expansion(e1, fx, fy);
      const double a11 = 0.5 * (r0[2] + r1[2]);
      const double a22 = 0.5 * (r0[3] + r1[3]);
      const double a12 = 0.5 * (r0[4] + r1[4]);
      const double db1 = 0.5 * (r0[0] - r1[0]) + a11 * dx + a12 * dy;
      const double db2 = 0.5 * (r0[1] - r1[1]) + a12 * dx + a22 * dy;
      const int edge = std::min({x, y, w - 1 - x, h - 1 - y});
      const double wgt = edge < 5 ? kBorder[edge] : 1.0;
      m[0][i] = wgt * (a11 * a11 + a12 * a12);
      m[1][i] = wgt * (a12 * (a11 + a22));
      m[2][i] = wgt * (a22 * a22 + a12 * a12);
      m[3][i] = wgt * (a11 * db1 + a12 * db2);
      m[4][i] = wgt * (a12 * db1 + a22 * db2);
    }
  return m;
}

// Normalized box average with edge replication.
std::vector<double> box_average(const std::vector<double>& src, int w, int h, int size) {
  const int r = size / 2;
  const double inv = 1.0 / size;
  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = x - r; k < x - r + size; ++k) acc += src[static_cast<std::size_t>(y) * w + std::clamp(k, 0, w - 1)];
      tmp[static_cast<std::size_t>(y) * w + x] = acc * inv;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = y - r; k < y - r + size; ++k) acc += tmp[static_cast<std::size_t>(std::clamp(k, 0, h - 1)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = acc * inv;
    }
  return out;
}

void solve_flow(const Planes5& m, int window, FlowField& flow) {
  const int w = flow.width, h = flow.height;
  Planes5 avg;
  for (int k = 0; k < 5; ++k) avg[k] = box_average(m[k], w, h, window);
  for (std::size_t i = 0; i < avg[0].size(); ++i) {
    const double g11 = avg[0][i], g12 = avg[1][i], g22 = avg[2][i];
    const double det = g11 * g22 - g12 * g12;
    const double trace = g11 + g22;
    if (!(trace > 0.0) || !(det > 1e-9 * trace * trace)) continue;  // degenerate: keep previous estimate
    flow.data[2 * i] = static_cast<float>((g22 * avg[3][i] - g12 * avg[4][i]) / det);
    flow.data[2 * i + 1] = static_cast<float>((g11 * avg[4][i] - g12 * avg[3][i]) / det);
  }
}

FlowField upsample_flow(const FlowField& coarse, int w, int h, double factor) {
  FlowField out(w, h);
  const double sx = static_cast<double>(coarse.width) / w, sy = static_cast<double>(coarse.height) / h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Point2 d = coarse.sample((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      out.data[2 * i] = static_cast<float>(d.x * factor);
      out.data[2 * i + 1] = static_cast<float>(d.y * factor);
    }
  return out;
}

Plane pyramid_level(const Plane& img, double scale, int w, int h) {
  if (scale == 1.0) return img;
  const double sigma = (1.0 / scale - 1.0) * 0.5;
  const int size = std::max(3, static_cast<int>(std::lround(sigma * 5)) | 1);
  return imgproc::resize_bilinear(imgproc::gaussian_blur(img, size, sigma), w, h);
}

}  // namespace

FlowField farneback_flow(const Frame& prev, const Frame& next, const FlowParams& params) {
  params.validate();
  if (prev.width() != next.width() || prev.height() != next.height()) {
    throw DimensionError("flow frames differ in size: " + std::to_string(prev.width()) + "x" +
                         std::to_string(prev.height()) + " vs " + std::to_string(next.width()) + "x" +
                         std::to_string(next.height()));
  }
  constexpr int kMinSize = 32;
  int levels = 1;
  while (levels < params.pyramid_levels) {
    const double s = std::pow(params.pyramid_scale, levels);
    if (std::lround(prev.width() * s) < kMinSize || std::lround(prev.height() * s) < kMinSize) break;
    ++levels;
  }

  FlowField flow;
  for (int level = levels - 1; level >= 0; --level) {
    const double scale = std::pow(params.pyramid_scale, level);
    const int w = level == 0 ? prev.width() : static_cast<int>(std::lround(prev.width() * scale));
    const int h = level == 0 ? prev.height() : static_cast<int>(std::lround(prev.height() * scale));
    flow = flow.data.empty() ? FlowField(w, h) : upsample_flow(flow, w, h, 1.0 / params.pyramid_scale);

    const Expansion e0 = poly_expand(pyramid_level(prev.plane(), scale, w, h), params.poly_n, params.poly_sigma);
    const Expansion e1 = poly_expand(pyramid_level(next.plane(), scale, w, h), params.poly_n, params.poly_sigma);
    for (int it = 0; it < params.iterations; ++it) solve_flow(update_matrices(e0, e1, flow), params.avg_window, flow);
  }
  return flow;
}

}  // namespace facedyn
