#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>

#include "facedyn/features.hpp"

namespace facedyn {

void LpqParams::validate() const {
  if (window < 3 || window % 2 == 0) throw ConfigError("LPQ window must be odd and >= 3");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("LPQ rho must lie in [0, 1)");
}

namespace {

// Rows: whitened STFT components; columns: window taps in row-major order.
Eigen::MatrixXd whitened_kernels(const LpqParams& p) {
  const int m = p.window, r = m / 2, taps = m * m;
  const double a = 1.0 / m;
  const std::array<std::array<double, 2>, 4> freqs{{{a, 0.0}, {0.0, a}, {a, a}, {a, -a}}};

  Eigen::MatrixXd f(8, taps);
  for (int k = 0; k < 4; ++k)
    for (int y = -r; y <= r; ++y)
      for (int x = -r; x <= r; ++x) {
        const double phase = 2.0 * std::numbers::pi * (freqs[k][0] * x + freqs[k][1] * y);
        const int i = (y + r) * m + (x + r);
        f(2 * k, i) = std::cos(phase);
        f(2 * k + 1, i) = -std::sin(phase);
      }

  Eigen::MatrixXd pixel_cov(taps, taps);
  for (int i = 0; i < taps; ++i)
    for (int j = 0; j < taps; ++j) {
      const double dx = i % m - j % m, dy = i / m - j / m;
      pixel_cov(i, j) = std::pow(p.rho, std::hypot(dx, dy));
    }

  const Eigen::MatrixXd coeff_cov = f * pixel_cov * f.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(coeff_cov);
  Eigen::MatrixXd v(8, 8);
  for (int c = 0; c < 8; ++c) {
    Eigen::VectorXd col = eig.eigenvectors().col(7 - c);  // descending eigenvalue
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    if (col(imax) < 0) col = -col;
    v.col(c) = col;
  }
  return v.transpose() * f;
}

}  // namespace

std::vector<std::uint8_t> lpq_codes(const Frame& frame, const LpqParams& params) {
  params.validate();
  const int m = params.window, r = m / 2;
  if (frame.width() < m || frame.height() < m) {
    throw DimensionError("frame " + std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                         " smaller than the LPQ window " + std::to_string(m));
  }
  const Eigen::MatrixXd k = whitened_kernels(params);
  const int ow = frame.width() - m + 1, oh = frame.height() - m + 1;
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(ow) * oh);
  std::vector<double> diff(static_cast<std::size_t>(m) * m);
  for (int y = r; y < frame.height() - r; ++y)
    for (int x = r; x < frame.width() - r; ++x) {
      // Differences from the center pixel: the window sums of every kernel
      // vanish, so this is the same transform with exact cancellation of DC.
      const double center = frame(x, y);
      for (int j = -r, i = 0; j <= r; ++j)
        for (int q = -r; q <= r; ++q, ++i) diff[i] = static_cast<double>(frame(x + q, y + j)) - center;
      const Eigen::Map<const Eigen::VectorXd> d(diff.data(), m * m);
      std::uint8_t code = 0;
      for (int c = 0; c < 8; ++c)
        if (k.row(c).dot(d) >= 0.0) code |= static_cast<std::uint8_t>(1u << c);
      codes[static_cast<std::size_t>(y - r) * ow + (x - r)] = code;
    }
  return codes;
}

std::vector<double> lpq_descriptor(const Frame& frame, const LpqParams& params) {
  const auto codes = lpq_codes(frame, params);
  std::vector<double> hist(kLpqBins, 0.0);
  for (auto c : codes) hist[c] += 1.0;
  const double inv = 1.0 / static_cast<double>(codes.size());
  for (double& h : hist) h *= inv;
  return hist;
}

}  // namespace facedyn
