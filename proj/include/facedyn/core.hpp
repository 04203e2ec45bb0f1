#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facedyn/error.hpp"

namespace facedyn {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(Point2 a, Point2 b);

// Axis-aligned box in pixel units. May extend beyond the frame; samplers clamp.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Point2 center() const { return {x + 0.5 * w, y + 0.5 * h}; }
  bool valid() const { return w > 0.0 && h > 0.0; }
  bool contains(const BoundingBox& inner, double slack = 1e-9) const;
  // Corners in clockwise order starting top-left.
  std::array<Point2, 4> corners() const;
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Bounding box of an arbitrary point set.
BoundingBox bounding_box_of(std::span<const Point2> pts);

// 2x3 affine map  [a b tx; c d ty]  acting on column vectors (x, y, 1).
struct AffineTransform {
  double a = 1.0, b = 0.0, tx = 0.0;
  double c = 0.0, d = 1.0, ty = 0.0;

  static AffineTransform identity() { return {}; }
  static AffineTransform translation(double dx, double dy);
  static AffineTransform scaling(double sx, double sy);
  // Counter-clockwise in a y-up frame; in image coordinates (y down) the
  // visual sense is clockwise. Only the matrix convention matters here.
  static AffineTransform rotation(double radians);
  static AffineTransform rotation_about(double radians, Point2 center);

  double determinant() const { return a * d - b * c; }
  Point2 apply(Point2 p) const { return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty}; }
  AffineTransform inverse() const;  // throws SingularTransformError

  // (lhs * rhs)(p) == lhs(rhs(p))
  friend AffineTransform operator*(const AffineTransform& lhs, const AffineTransform& rhs);
  friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

double max_abs_difference(const AffineTransform& x, const AffineTransform& y);

// Real-valued single-channel raster, row-major, unconstrained range.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, float fill = 0.0f);
  Plane(int width, int height, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float clamped(int x, int y) const;
  // Bilinear sample; coordinates outside the raster clamp to the nearest edge.
  double sample(double x, double y) const;

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }
  const std::vector<float>& values() const { return data_; }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

// Grayscale frame with intensities in [0, 1].
class Frame {
 public:
  Frame() = default;
  // Validates that every value is finite and inside [0, 1].
  explicit Frame(Plane plane);
  Frame(int width, int height, std::vector<float> pixels);
  // Clamps values into [0, 1]; non-finite values become 0.
  static Frame clamp_from(Plane plane);

  int width() const { return plane_.width(); }
  int height() const { return plane_.height(); }
  float operator()(int x, int y) const { return plane_(x, y); }
  double sample(double x, double y) const { return plane_.sample(x, y); }
  std::span<const float> pixels() const { return plane_.data(); }
  const Plane& plane() const { return plane_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  Plane plane_;
};

// Interleaved RGB raster with channel values in [0, 1].
struct RgbFrame {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // width * height * 3
};

Frame to_grayscale(const RgbFrame& rgb);

// Ordered frames of one video; at least two frames of equal size, fps > 0.
class VideoSequence {
 public:
  VideoSequence(std::vector<Frame> frames, double fps);

  std::size_t size() const { return frames_.size(); }
  int width() const { return frames_.front().width(); }
  int height() const { return frames_.front().height(); }
  double fps() const { return fps_; }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }
  const std::vector<Frame>& frames() const { return frames_; }
  auto begin() const { return frames_.begin(); }
  auto end() const { return frames_.end(); }

 private:
  std::vector<Frame> frames_;
  double fps_;
};

enum class SmileLabel { Posed, Spontaneous };

std::string_view to_string(SmileLabel label);
SmileLabel parse_smile_label(std::string_view text);  // throws ManifestError

// output(u, v) = bilinear sample of src at t^-1 (u, v), edge-clamped.
Frame warp_affine(const Frame& src, const AffineTransform& t, int out_w, int out_h);
Plane warp_affine(const Plane& src, const AffineTransform& t, int out_w, int out_h);

}  // namespace facedyn
