#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace fixtures {

SmoothTexture::SmoothTexture(std::uint32_t seed, int components, double max_freq) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> freq(0.3 * max_freq, max_freq);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  double total = 0.0;
  for (int i = 0; i < components; ++i) {
    const double theta = angle(rng);
    const double f = freq(rng);
    waves_.push_back({f * std::cos(theta), f * std::sin(theta), angle(rng), amp(rng)});
    total += waves_.back().amp;
  }
  scale_ = 0.4 / total;
}

double SmoothTexture::operator()(double x, double y) const {
  double v = 0.0;
  for (const auto& w : waves_) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
  return 0.5 + scale_ * v;
}

facedyn::Frame render(int w, int h, const std::function<double(double, double)>& f) {
  facedyn::Plane p(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) p(x, y) = static_cast<float>(f(x, y));
  return facedyn::Frame::clamp_from(std::move(p));
}

facedyn::Frame constant_frame(int w, int h, float value) { return facedyn::Frame(facedyn::Plane(w, h, value)); }

facedyn::Frame checkerboard(int squares, int square) {
  const int n = squares * square;
  return render(n, n, [square](double x, double y) {
    const int cx = static_cast<int>(x) / square, cy = static_cast<int>(y) / square;
    return ((cx + cy) % 2 == 0) ? 0.2 : 0.8;
  });
}

double gaussian_blob(double x, double y, double cx, double cy, double sigma, double amplitude, double background) {
  const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
  return background + amplitude * std::exp(-0.5 * r2 / (sigma * sigma));
}

double interior_mean_abs_diff(const facedyn::Plane& a, const facedyn::Plane& b, int margin) {
  double sum = 0.0;
  long n = 0;
  for (int y = margin; y < a.height() - margin; ++y)
    for (int x = margin; x < a.width() - margin; ++x) {
      sum += std::abs(static_cast<double>(a(x, y)) - b(x, y));
      ++n;
    }
  return n ? sum / n : 0.0;
}

double interior_max_abs_diff(const facedyn::Plane& a, const facedyn::Plane& b, int margin) {
  double m = 0.0;
  for (int y = margin; y < a.height() - margin; ++y)
    for (int x = margin; x < a.width() - margin; ++x) m = std::max(m, std::abs(static_cast<double>(a(x, y)) - b(x, y)));
  return m;
}

}  // namespace fixtures
