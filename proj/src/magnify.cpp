#include "facedyn/magnify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "facedyn/imgproc.hpp"
#include "fft.hpp"

namespace facedyn {

void MagnifyParams::validate(double fps) const {
  if (!(alpha >= 0.0)) throw ConfigError("magnify: alpha must be >= 0");
  if (levels < 1) throw ConfigError("magnify: levels must be >= 1");
  if (!(lambda_c > 0.0)) throw ConfigError("magnify: lambda_c must be positive");
  if (!(f_lo > 0.0) || !(f_hi > f_lo) || !(f_hi < 0.5 * fps)) {
    throw ConfigError("magnify: band [" + std::to_string(f_lo) + ", " + std::to_string(f_hi) +
                      "] Hz must satisfy 0 < f_lo < f_hi < fps/2 = " + std::to_string(0.5 * fps));
  }
}

LaplacianPyramid build_pyramid(const Plane& image, int levels) {
  if (levels < 1) throw DimensionError("pyramid needs at least one level");
  const long min_side = 1L << levels;
  if (image.width() < min_side || image.height() < min_side) {
    throw DimensionError("image " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                         " too small for a " + std::to_string(levels) + "-level pyramid");
  }
  LaplacianPyramid pyr;
  Plane current = image;
  for (int l = 0; l + 1 < levels; ++l) {
    Plane down = imgproc::pyr_down(current);
    Plane up = imgproc::pyr_up(down, current.width(), current.height());
    for (std::size_t i = 0; i < current.size(); ++i) current.data()[i] -= up.data()[i];
    pyr.bands.push_back(std::move(current));
    current = std::move(down);
  }
  pyr.bands.push_back(std::move(current));
  return pyr;
}

Plane reconstruct(const LaplacianPyramid& pyramid) {
  if (pyramid.bands.empty()) throw DimensionError("empty pyramid");
  Plane current = pyramid.bands.back();
  for (int l = static_cast<int>(pyramid.bands.size()) - 2; l >= 0; --l) {
    const Plane& band = pyramid.bands[l];
    Plane up = imgproc::pyr_up(current, band.width(), band.height());
    for (std::size_t i = 0; i < up.size(); ++i) up.data()[i] += band.data()[i];
    current = std::move(up);
  }
  return current;
}

namespace {

void check_band(double f_lo, double f_hi, double fps) {
  if (!(fps > 0.0) || !(f_lo > 0.0) || !(f_hi > f_lo) || !(f_hi < 0.5 * fps)) {
    throw ConfigError("temporal band [" + std::to_string(f_lo) + ", " + std::to_string(f_hi) +
                      "] Hz is outside (0, Nyquist=" + std::to_string(0.5 * fps) + ")");
  }
}

// Band-passes `count` series of length `n` stored contiguously in `data`.
class BatchBandpass {
 public:
  BatchBandpass(int n, int count, double f_lo, double f_hi, double fps)
      : n_(n), count_(count), bins_(n / 2 + 1), data_(static_cast<std::size_t>(n) * count),
        spectrum_(static_cast<std::size_t>(bins_) * count) {
    keep_.resize(bins_);
    for (int k = 0; k < bins_; ++k) {
      const double f = k * fps / n;
      keep_[k] = f >= f_lo - 1e-9 && f <= f_hi + 1e-9;
    }
    std::lock_guard lock(detail::fftw_planner_mutex());
    int len[1] = {n};
    forward_ = fftw_plan_many_dft_r2c(1, len, count, data_.data(), nullptr, 1, n,
                                      reinterpret_cast<fftw_complex*>(spectrum_.data()), nullptr, 1, bins_,
                                      FFTW_ESTIMATE);
    inverse_ = fftw_plan_many_dft_c2r(1, len, count, reinterpret_cast<fftw_complex*>(spectrum_.data()), nullptr, 1,
                                      bins_, data_.data(), nullptr, 1, n, FFTW_ESTIMATE);
  }
  ~BatchBandpass() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  BatchBandpass(const BatchBandpass&) = delete;
  BatchBandpass& operator=(const BatchBandpass&) = delete;

  double* series(int i) { return data_.data() + static_cast<std::size_t>(i) * n_; }

  void run() {
    fftw_execute(forward_);
    for (int s = 0; s < count_; ++s) {
      auto* row = spectrum_.data() + static_cast<std::size_t>(s) * bins_;
      for (int k = 0; k < bins_; ++k)
        if (!keep_[k]) row[k] = {0.0, 0.0};
    }
    fftw_execute(inverse_);
    const double scale = 1.0 / n_;
    for (double& v : data_) v *= scale;
  }

 private:
  struct Complex {
    double re, im;
  };
  int n_, count_, bins_;
  std::vector<double> data_;
  std::vector<Complex> spectrum_;
  std::vector<bool> keep_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace

std::vector<double> temporal_bandpass(std::span<const double> series, double f_lo, double f_hi, double fps) {
  if (series.size() < 4) throw DimensionError("temporal_bandpass needs at least 4 samples");
  check_band(f_lo, f_hi, fps);
  BatchBandpass bp(static_cast<int>(series.size()), 1, f_lo, f_hi, fps);
  std::copy(series.begin(), series.end(), bp.series(0));
  bp.run();
  return {bp.series(0), bp.series(0) + series.size()};
}

double level_wavelength(int level) { return std::ldexp(2.0, level); }

double level_gain(const MagnifyParams& params, int level) {
  return std::min(params.alpha, params.alpha * level_wavelength(level) / params.lambda_c);
}

VideoSequence magnify_sequence(const VideoSequence& video, const MagnifyParams& params) {
  params.validate(video.fps());
  if (video.size() < 4) throw DimensionError("magnify_sequence needs at least 4 frames");
  const int frames = static_cast<int>(video.size());

  std::vector<LaplacianPyramid> pyramids;
  pyramids.reserve(video.size());
  for (const auto& f : video) pyramids.push_back(build_pyramid(f.plane(), params.levels));

  constexpr int kChunk = 2048;
  for (int level = 0; level < params.levels; ++level) {
    const double gain = level_gain(params, level);
    if (gain == 0.0) continue;
    const int pixels = static_cast<int>(pyramids[0].bands[level].size());
    for (int start = 0; start < pixels; start += kChunk) {
      const int count = std::min(kChunk, pixels - start);
      BatchBandpass bp(frames, count, params.f_lo, params.f_hi, video.fps());
      for (int p = 0; p < count; ++p) {
        double* s = bp.series(p);
        for (int t = 0; t < frames; ++t) s[t] = pyramids[t].bands[level].data()[start + p];
      }
      bp.run();
      for (int p = 0; p < count; ++p) {
        const double* s = bp.series(p);
        for (int t = 0; t < frames; ++t)
          pyramids[t].bands[level].data()[start + p] += static_cast<float>(gain * s[t]);
      }
    }
  }

  std::vector<Frame> out;
  out.reserve(video.size());
  for (const auto& pyr : pyramids) out.push_back(Frame::clamp_from(reconstruct(pyr)));
  return VideoSequence(std::move(out), video.fps());
}

}  // namespace facedyn
