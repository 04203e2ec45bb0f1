#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facedyn/core.hpp"

namespace facedyn {

enum class DescriptorKind { LPQ, HOG, FLOW, EXTERNAL };

std::string_view to_string(DescriptorKind kind);
DescriptorKind parse_descriptor_kind(std::string_view text);  // case-insensitive; throws ConfigError

// T x D row-major matrix of per-frame descriptors.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, DescriptorKind kind = DescriptorKind::EXTERNAL);
  // Throws DimensionError when data.size() != rows * cols, FormatError on non-finite values.
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                DescriptorKind kind = DescriptorKind::EXTERNAL);
  // Stacks equal-length rows; throws DimensionError on ragged input.
  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows, DescriptorKind kind);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  DescriptorKind kind() const { return kind_; }
  void set_kind(DescriptorKind kind) { kind_ = kind; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  DescriptorKind kind_ = DescriptorKind::EXTERNAL;
};

// "FDM1" container: u32 rows, u32 cols, float32 values, all little-endian.
// Values are narrowed to float32 on write.
std::string encode_feature_matrix(const FeatureMatrix& m);
FeatureMatrix decode_feature_matrix(const std::string& bytes, DescriptorKind kind = DescriptorKind::EXTERNAL);
void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_feature_matrix(const std::filesystem::path& path, DescriptorKind kind = DescriptorKind::EXTERNAL);

// ---------------------------------------------------------------- LPQ

struct LpqParams {
  int window = 7;    // M, odd
  double rho = 0.9;  // pixel correlation of the whitening model
  void validate() const;
};

inline constexpr std::size_t kLpqBins = 256;

// Normalized 256-bin histogram of whitened STFT phase codes over interior pixels.
std::vector<double> lpq_descriptor(const Frame& frame, const LpqParams& params = {});
// Per-pixel codes for the interior region, (W-M+1) x (H-M+1) row-major.
std::vector<std::uint8_t> lpq_codes(const Frame& frame, const LpqParams& params = {});

// ---------------------------------------------------------------- HOG

struct HogParams {
  int cell = 4;
  int orientations = 9;
  void validate() const;
  int dims_per_cell() const { return 3 * orientations + 4; }
};

// Per-cell layout: 2n contrast-sensitive, n contrast-insensitive, 4 texture
// values. Cells in row-major order. Remainder pixels beyond a whole cell are
// ignored.
std::vector<double> hog_descriptor(const Frame& frame, const HogParams& params = {});
std::size_t hog_dimension(int width, int height, const HogParams& params = {});

// ---------------------------------------------------------------- optical flow

struct FlowParams {
  int pyramid_levels = 3;
  double pyramid_scale = 0.5;
  int poly_n = 7;
  double poly_sigma = 1.5;
  int iterations = 3;
  int avg_window = 15;
  void validate() const;
};

// Dense displacement with next(x + d(x)) ~= prev(x). Interleaved (dx, dy).
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  FlowField() = default;
  FlowField(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 2, 0.0f) {}
  float dx(int x, int y) const { return data[2 * (static_cast<std::size_t>(y) * width + x)]; }
  float dy(int x, int y) const { return data[2 * (static_cast<std::size_t>(y) * width + x) + 1]; }
  Point2 sample(double x, double y) const;  // bilinear, edge-clamped
};

FlowField farneback_flow(const Frame& prev, const Frame& next, const FlowParams& params = {});

// Eye boxes as tracked plus nose and mouth boxes derived from the eye centers.
struct RegionLayout {
  BoundingBox left_eye;
  BoundingBox right_eye;
  BoundingBox nose;
  BoundingBox mouth;

  // Nose: d x d centered at midpoint + (0, 0.6 d).
  // Mouth: 1.5 d x 0.8 d centered at midpoint + (0, 1.1 d).
  static RegionLayout from_eyes(const BoundingBox& left_eye, const BoundingBox& right_eye);
};

struct RegionSize {
  int w, h;
};
// Fixed resampling sizes: left eye, right eye, nose, mouth.
inline constexpr RegionSize kRegionSizes[4] = {{64, 48}, {64, 48}, {64, 64}, {96, 48}};
inline constexpr std::size_t kFlowRegionDim = 2 * (64 * 48 * 2 + 64 * 64 + 96 * 48);

// Concatenated (dx, dy) samples of the four regions after clamping to the field.
std::vector<double> extract_flow_regions(const FlowField& flow, const RegionLayout& layout);

// ---------------------------------------------------------------- external

struct ExternalFeatures {
  FeatureMatrix matrix;
  std::vector<std::size_t> off_norm_rows;  // rows whose L2 norm differs from 1 by > 1e-3
};

ExternalFeatures load_external_features(const std::filesystem::path& path, std::size_t expected_dim = 4096);
// As above; off-norm rows produce a warning on std::clog instead of an error.
FeatureMatrix ingest_external_features(const std::filesystem::path& path, std::size_t expected_dim = 4096);

}  // namespace facedyn
