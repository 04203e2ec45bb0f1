#include <algorithm>
#include <cmath>
#include <numbers>

#include "facedyn/features.hpp"

namespace facedyn {

void HogParams::validate() const {
  if (cell < 2) throw ConfigError("HOG cell size must be >= 2");
  if (orientations < 2) throw ConfigError("HOG orientations must be >= 2");
}

std::size_t hog_dimension(int width, int height, const HogParams& params) {
  params.validate();
  return static_cast<std::size_t>(width / params.cell) * static_cast<std::size_t>(height / params.cell) *
         static_cast<std::size_t>(params.dims_per_cell());
}

std::vector<double> hog_descriptor(const Frame& frame, const HogParams& params) {
  params.validate();
  const int s = params.cell, n = params.orientations;
  const int cw = frame.width() / s, ch = frame.height() / s;
  if (cw == 0 || ch == 0) {
    throw DimensionError("frame " + std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                         " smaller than one HOG cell of " + std::to_string(s) + " px");
  }
  const int vw = cw * s, vh = ch * s;
  const int bins = 2 * n;

  std::vector<double> ux(n), uy(n);
  for (int o = 0; o < n; ++o) {
    ux[o] = std::cos(o * std::numbers::pi / n);
    uy[o] = std::sin(o * std::numbers::pi / n);
  }

  // Orientation is snapped to the nearest of 2n directions; magnitude is
  // spread bilinearly over the four nearest cell centers.
  std::vector<double> hist(static_cast<std::size_t>(cw) * ch * bins, 0.0);
  auto pix = [&](int x, int y) { return static_cast<double>(frame(std::clamp(x, 0, vw - 1), std::clamp(y, 0, vh - 1))); };
  for (int y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      const double dx = pix(x + 1, y) - pix(x - 1, y);
      const double dy = pix(x, y + 1) - pix(x, y - 1);
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0.0) continue;
      double best = 0.0;
      int best_o = 0;
      for (int o = 0; o < n; ++o) {
        const double dot = ux[o] * dx + uy[o] * dy;
        if (dot > best) {
          best = dot;
          best_o = o;
        } else if (-dot > best) {
          best = -dot;
          best_o = o + n;
        }
      }
      const double xp = (x + 0.5) / s - 0.5, yp = (y + 0.5) / s - 0.5;
      const int ix = static_cast<int>(std::floor(xp)), iy = static_cast<int>(std::floor(yp));
      const double fx = xp - ix, fy = yp - iy;
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
          const int cx = ix + i, cy = iy + j;
          if (cx < 0 || cy < 0 || cx >= cw || cy >= ch) continue;
          const double wgt = (i ? fx : 1 - fx) * (j ? fy : 1 - fy);
          hist[(static_cast<std::size_t>(cy) * cw + cx) * bins + best_o] += wgt * mag;
        }
    }

  std::vector<double> energy(static_cast<std::size_t>(cw) * ch, 0.0);
  for (std::size_t c = 0; c < energy.size(); ++c)
    for (int o = 0; o < n; ++o) {
      const double v = hist[c * bins + o] + hist[c * bins + o + n];
      energy[c] += v * v;
    }
  auto e = [&](int cx, int cy) { return energy[static_cast<std::size_t>(std::clamp(cy, 0, ch - 1)) * cw + std::clamp(cx, 0, cw - 1)]; };
  // 2x2 block whose top-left cell is (bx, by); indices past the grid replicate the edge.
  auto block_inv = [&](int bx, int by) {
    constexpr double kEps = 1e-6;
    return 1.0 / std::sqrt(e(bx, by) + e(bx + 1, by) + e(bx, by + 1) + e(bx + 1, by + 1) + kEps);
  };

  constexpr double kClamp = 0.2;
  const double texture_weight = 1.0 / std::sqrt(static_cast<double>(bins));
  const int dims = params.dims_per_cell();
  std::vector<double> out(static_cast<std::size_t>(cw) * ch * dims);
  for (int cy = 0; cy < ch; ++cy)
    for (int cx = 0; cx < cw; ++cx) {
      const double norms[4] = {block_inv(cx, cy), block_inv(cx, cy - 1), block_inv(cx - 1, cy), block_inv(cx - 1, cy - 1)};
      const double* h = &hist[(static_cast<std::size_t>(cy) * cw + cx) * bins];
      double* dst = &out[(static_cast<std::size_t>(cy) * cw + cx) * dims];
      double texture[4] = {0, 0, 0, 0};
      for (int o = 0; o < bins; ++o) {
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) {
          const double v = std::min(h[o] * norms[k], kClamp);
          sum += v;
          texture[k] += v;
        }
        dst[o] = 0.5 * sum;
      }
      for (int o = 0; o < n; ++o) {
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) sum += std::min((h[o] + h[o + n]) * norms[k], kClamp);
        dst[bins + o] = 0.5 * sum;
      }
      for (int k = 0; k < 4; ++k) dst[bins + n + k] = texture_weight * texture[k];
    }
  return out;
}

}  // namespace facedyn
