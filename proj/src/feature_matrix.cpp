#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <string>

#include "binary.hpp"
#include "facedyn/features.hpp"
#include "facedyn/image_io.hpp"

namespace facedyn {

std::string_view to_string(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::LPQ:
      return "lpq";
    case DescriptorKind::HOG:
      return "hog";
    case DescriptorKind::FLOW:
      return "flow";
    case DescriptorKind::EXTERNAL:
      return "external";
  }
  return "external";
}

DescriptorKind parse_descriptor_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto k : {DescriptorKind::LPQ, DescriptorKind::HOG, DescriptorKind::FLOW, DescriptorKind::EXTERNAL})
    if (lower == to_string(k)) return k;
  throw ConfigError("unknown descriptor '" + std::string(text) + "' (expected lpq, hog, flow or external)");
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, DescriptorKind kind)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0), kind_(kind) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data, DescriptorKind kind)
    : rows_(rows), cols_(cols), data_(std::move(data)), kind_(kind) {
  if (data_.size() != rows * cols) {
    throw DimensionError("feature matrix " + std::to_string(rows) + "x" + std::to_string(cols) + " given " +
                         std::to_string(data_.size()) + " values");
  }
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      throw FormatError("non-finite feature at row " + std::to_string(i / std::max<std::size_t>(cols, 1)));
}

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows, DescriptorKind kind) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols)
      throw DimensionError("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                           " values, expected " + std::to_string(cols));
    data.insert(data.end(), rows[r].begin(), rows[r].end());
  }
  return FeatureMatrix(rows.size(), cols, std::move(data), kind);
}

std::string encode_feature_matrix(const FeatureMatrix& m) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (m.rows() > kMax || m.cols() > kMax) throw DimensionError("feature matrix too large for FDM1");
  std::string out = "FDM1";
  out.reserve(12 + 4 * m.data().size());
  detail::put_le(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_le(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) detail::put_le(out, static_cast<float>(v));
  return out;
}

FeatureMatrix decode_feature_matrix(const std::string& bytes, DescriptorKind kind) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "FDM1") != 0) throw FormatError("not an FDM1 feature matrix");
  std::size_t pos = 4;
  const auto rows = detail::get_le<std::uint32_t>(bytes, pos);
  const auto cols = detail::get_le<std::uint32_t>(bytes, pos);
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
  if (bytes.size() - 12 != count * 4) {
    throw FormatError("FDM1 header declares " + std::to_string(rows) + "x" + std::to_string(cols) + " but payload has " +
                      std::to_string(bytes.size() - 12) + " bytes");
  }
  std::vector<double> data(count);
  for (auto& v : data) v = detail::get_le<float>(bytes, pos);
  return FeatureMatrix(rows, cols, std::move(data), kind);
}

void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  write_file_atomic(path, encode_feature_matrix(m));
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path, DescriptorKind kind) {
  try {
    return decode_feature_matrix(read_file(path), kind);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

ExternalFeatures load_external_features(const std::filesystem::path& path, std::size_t expected_dim) {
  ExternalFeatures out{read_feature_matrix(path, DescriptorKind::EXTERNAL), {}};
  const auto& m = out.matrix;
  if (m.cols() != expected_dim) {
    throw DimensionError(path.string() + ": external features have " + std::to_string(m.cols()) +
                         " columns, expected " + std::to_string(expected_dim));
  }
  if (m.rows() == 0) throw DimensionError(path.string() + ": external feature file has no frames");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sq = 0.0;
    for (double v : m.row(r)) sq += v * v;
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-3) out.off_norm_rows.push_back(r);
  }
  return out;
}

FeatureMatrix ingest_external_features(const std::filesystem::path& path, std::size_t expected_dim) {
  auto loaded = load_external_features(path, expected_dim);
  if (!loaded.off_norm_rows.empty()) {
    std::clog << "warning: " << path.string() << ": " << loaded.off_norm_rows.size()
              << " row(s) are not L2-normalized (first: row " << loaded.off_norm_rows.front() << ")\n";
  }
  return std::move(loaded.matrix);
}

// ---------------------------------------------------------------- regions

Point2 FlowField::sample(double x, double y) const {
  x = std::clamp(x, 0.0, static_cast<double>(width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height - 1));
  const int x0 = std::min(static_cast<int>(x), width - 1), y0 = std::min(static_cast<int>(y), height - 1);
  const int x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
  const double fx = x - x0, fy = y - y0;
  auto lerp2 = [&](int channel) {
    auto at = [&](int xx, int yy) { return static_cast<double>(data[2 * (static_cast<std::size_t>(yy) * width + xx) + channel]); };
    return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) + fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
  };
  return {lerp2(0), lerp2(1)};
}

RegionLayout RegionLayout::from_eyes(const BoundingBox& left_eye, const BoundingBox& right_eye) {
  const Point2 l = left_eye.center(), r = right_eye.center();
  const double d = distance(l, r);
  if (!(d > 0.0)) throw DegenerateGeometryError("region layout: eye centers coincide");
  const Point2 mid = 0.5 * (l + r);
  auto centered = [](Point2 c, double w, double h) { return BoundingBox{c.x - 0.5 * w, c.y - 0.5 * h, w, h}; };
  return {left_eye, right_eye, centered(mid + Point2{0, 0.6 * d}, d, d),
          centered(mid + Point2{0, 1.1 * d}, 1.5 * d, 0.8 * d)};
}

std::vector<double> extract_flow_regions(const FlowField& flow, const RegionLayout& layout) {
  if (flow.width <= 0 || flow.height <= 0) throw DimensionError("empty flow field");
  static constexpr const char* kNames[4] = {"left eye", "right eye", "nose", "mouth"};
  const BoundingBox boxes[4] = {layout.left_eye, layout.right_eye, layout.nose, layout.mouth};
  std::vector<double> out;
  out.reserve(kFlowRegionDim);
  for (int r = 0; r < 4; ++r) {
    const double x0 = std::clamp(boxes[r].x, 0.0, static_cast<double>(flow.width));
    const double y0 = std::clamp(boxes[r].y, 0.0, static_cast<double>(flow.height));
    const double x1 = std::clamp(boxes[r].x + boxes[r].w, 0.0, static_cast<double>(flow.width));
    const double y1 = std::clamp(boxes[r].y + boxes[r].h, 0.0, static_cast<double>(flow.height));
    if (!(x1 > x0) || !(y1 > y0)) throw DimensionError(std::string(kNames[r]) + " region has zero area inside the frame");
    const auto [rw, rh] = kRegionSizes[r];
    for (int j = 0; j < rh; ++j)
      for (int i = 0; i < rw; ++i) {
        const Point2 d = flow.sample(x0 + (i + 0.5) * (x1 - x0) / rw - 0.5, y0 + (j + 0.5) * (y1 - y0) / rh - 0.5);
        out.push_back(d.x);
        out.push_back(d.y);
      }
  }
  return out;
}

}  // namespace facedyn
