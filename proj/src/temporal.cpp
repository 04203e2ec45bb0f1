#include "facedyn/temporal.hpp"

#include <cmath>

#include "fft.hpp"

namespace facedyn {

void TemporalConfig::validate() const {
  if (target_len < 1) throw ConfigError("temporal target length must be >= 1");
}

namespace {

enum class Direction { Forward, Inverse };

// Transforms `count` interleaved series of length n (element t of series j at
// t * count + j) in place.
void strided_dct(std::vector<double>& data, int n, int count, Direction dir) {
  if (n == 1) return;  // the orthonormal transform of length 1 is the identity
  std::vector<double> out(data.size());
  const int len[1] = {n};
  const fftw_r2r_kind kind[1] = {dir == Direction::Forward ? FFTW_REDFT10 : FFTW_REDFT01};
  fftw_plan raw;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    raw = fftw_plan_many_r2r(1, len, count, data.data(), nullptr, count, 1, out.data(), nullptr, count, 1, kind,
                             FFTW_ESTIMATE);
  }
  const detail::FftwPlan plan(raw);
  const double s0 = std::sqrt(1.0 / n), sk = std::sqrt(2.0 / n);
  if (dir == Direction::Inverse) {
    // REDFT01 computes X0 + 2 sum_k Xk cos(...), so pre-scale by s(k) and 1/2.
    for (int j = 0; j < count; ++j) data[j] *= s0;
    for (std::size_t i = count; i < data.size(); ++i) data[i] *= 0.5 * sk;
  }
  plan.execute();
  if (dir == Direction::Forward) {
    for (int j = 0; j < count; ++j) out[j] *= 0.5 * s0;
    for (std::size_t i = count; i < out.size(); ++i) out[i] *= 0.5 * sk;
  }
  data = std::move(out);
}

}  // namespace

std::vector<double> dct_time(std::span<const double> series) {
  if (series.empty()) throw DimensionError("dct_time: empty series");
  std::vector<double> v(series.begin(), series.end());
  strided_dct(v, static_cast<int>(v.size()), 1, Direction::Forward);
  return v;
}

std::vector<double> idct_time(std::span<const double> coefficients) {
  if (coefficients.empty()) throw DimensionError("idct_time: empty series");
  std::vector<double> v(coefficients.begin(), coefficients.end());
  strided_dct(v, static_cast<int>(v.size()), 1, Direction::Inverse);
  return v;
}

FeatureMatrix dct_columns(const FeatureMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw DimensionError("dct_columns: empty feature matrix");
  std::vector<double> data = m.data();
  strided_dct(data, static_cast<int>(m.rows()), static_cast<int>(m.cols()), Direction::Forward);
  return FeatureMatrix(m.rows(), m.cols(), std::move(data), m.kind());
}

FeatureMatrix normalize_length(const FeatureMatrix& m, const TemporalConfig& cfg) {
  cfg.validate();
  FeatureMatrix coeffs = dct_columns(m);
  const std::size_t l = static_cast<std::size_t>(cfg.target_len);
  std::vector<double> data = std::move(coeffs.data());
  data.resize(l * m.cols(), 0.0);  // row-major: truncation drops high-index rows, growth appends zero rows
  return FeatureMatrix(l, m.cols(), std::move(data), m.kind());
}

std::vector<double> flatten(const FeatureMatrix& m) {
  std::vector<double> out;
  out.reserve(m.rows() * m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c)
    for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(m(r, c));
  return out;
}

}  // namespace facedyn
