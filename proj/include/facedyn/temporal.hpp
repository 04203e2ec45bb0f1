#pragma once

#include <span>
#include <vector>

#include "facedyn/features.hpp"

namespace facedyn {

struct TemporalConfig {
  int target_len = 100;  // L
  void validate() const;  // throws ConfigError
};

// Orthonormal DCT-II: C[k] = s(k) sum_t x[t] cos(pi (2t+1) k / 2T),
// s(0) = sqrt(1/T), s(k>0) = sqrt(2/T).
std::vector<double> dct_time(std::span<const double> series);
// Inverse of dct_time (orthonormal DCT-III).
std::vector<double> idct_time(std::span<const double> coefficients);

// dct_time applied to every column; T x D in, T x D out.
FeatureMatrix dct_columns(const FeatureMatrix& m);

// Per-column DCT, then keep the first L coefficients or zero-pad to L rows.
FeatureMatrix normalize_length(const FeatureMatrix& m, const TemporalConfig& cfg = {});

// Column-major concatenation: all rows of column 0, then column 1, ...
std::vector<double> flatten(const FeatureMatrix& m);

}  // namespace facedyn
