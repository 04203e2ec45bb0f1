#include "facedyn/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace facedyn {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool BoundingBox::contains(const BoundingBox& inner, double slack) const {
  return inner.x >= x - slack && inner.y >= y - slack && inner.x + inner.w <= x + w + slack &&
         inner.y + inner.h <= y + h + slack;
}

std::array<Point2, 4> BoundingBox::corners() const {
  return {Point2{x, y}, Point2{x + w, y}, Point2{x + w, y + h}, Point2{x, y + h}};
}

BoundingBox bounding_box_of(std::span<const Point2> pts) {
  if (pts.empty()) return {};
  double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

AffineTransform AffineTransform::translation(double dx, double dy) {
  AffineTransform t;
  t.tx = dx;
  t.ty = dy;
  return t;
}

AffineTransform AffineTransform::scaling(double sx, double sy) {
  AffineTransform t;
  t.a = sx;
  t.d = sy;
  return t;
}

AffineTransform AffineTransform::rotation(double radians) {
  const double cs = std::cos(radians), sn = std::sin(radians);
  return {cs, -sn, 0.0, sn, cs, 0.0};
}

AffineTransform AffineTransform::rotation_about(double radians, Point2 center) {
  return translation(center.x, center.y) * rotation(radians) * translation(-center.x, -center.y);
}

AffineTransform AffineTransform::inverse() const {
  const double det = determinant();
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
  if (!std::isfinite(det) || scale == 0.0 || std::abs(det) <= 1e-12 * scale * scale) {
    throw SingularTransformError("affine transform is singular (det=" + std::to_string(det) + ")");
  }
  const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
  return {ia, ib, -(ia * tx + ib * ty), ic, id, -(ic * tx + id * ty)};
}

AffineTransform operator*(const AffineTransform& l, const AffineTransform& r) {
  return {l.a * r.a + l.b * r.c,         l.a * r.b + l.b * r.d,        l.a * r.tx + l.b * r.ty + l.tx,
          l.c * r.a + l.d * r.c,         l.c * r.b + l.d * r.d,        l.c * r.tx + l.d * r.ty + l.ty};
}

double max_abs_difference(const AffineTransform& x, const AffineTransform& y) {
  return std::max({std::abs(x.a - y.a), std::abs(x.b - y.b), std::abs(x.tx - y.tx), std::abs(x.c - y.c),
                   std::abs(x.d - y.d), std::abs(x.ty - y.ty)});
}

// ---------------------------------------------------------------------------

Plane::Plane(int width, int height, float fill)
    : width_(width), height_(height), data_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
  if (width <= 0 || height <= 0) throw DimensionError("plane dimensions must be positive");
}

Plane::Plane(int width, int height, std::vector<float> data) : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) throw DimensionError("plane dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("plane data size " + std::to_string(data_.size()) + " != " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
}

float Plane::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return (*this)(x, y);
}

double Plane::sample(double x, double y) const {
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * (*this)(x0, y0) + fx * (*this)(x1, y0);
  const double bottom = (1.0 - fx) * (*this)(x0, y1) + fx * (*this)(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

// ---------------------------------------------------------------------------

Frame::Frame(Plane plane) : plane_(std::move(plane)) {
  for (float v : plane_.data()) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw DimensionError("frame intensity outside [0,1]: " + std::to_string(v));
    }
  }
}

Frame::Frame(int width, int height, std::vector<float> pixels) : Frame(Plane(width, height, std::move(pixels))) {}

Frame Frame::clamp_from(Plane plane) {
  for (float& v : plane.data()) v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
  Frame f;
  f.plane_ = std::move(plane);
  return f;
}

Frame to_grayscale(const RgbFrame& rgb) {
  if (rgb.width <= 0 || rgb.height <= 0 ||
      rgb.data.size() != static_cast<std::size_t>(rgb.width) * rgb.height * 3) {
    throw DimensionError("rgb frame data does not match " + std::to_string(rgb.width) + "x" +
                         std::to_string(rgb.height) + "x3");
  }
  Plane out(rgb.width, rgb.height);
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double luma = 0.299 * rgb.data[3 * i] + 0.587 * rgb.data[3 * i + 1] + 0.114 * rgb.data[3 * i + 2];
    dst[i] = static_cast<float>(luma);
  }
  return Frame::clamp_from(std::move(out));
}

VideoSequence::VideoSequence(std::vector<Frame> frames, double fps) : frames_(std::move(frames)), fps_(fps) {
  if (frames_.size() < 2) throw DimensionError("video needs at least 2 frames, got " + std::to_string(frames_.size()));
  if (!(fps_ > 0.0) || !std::isfinite(fps_)) throw DimensionError("fps must be positive");
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    if (frames_[i].width() != frames_[0].width() || frames_[i].height() != frames_[0].height()) {
      throw DimensionError("frame " + std::to_string(i) + " is " + std::to_string(frames_[i].width()) + "x" +
                           std::to_string(frames_[i].height()) + ", expected " + std::to_string(frames_[0].width()) +
                           "x" + std::to_string(frames_[0].height()));
    }
  }
}

std::string_view to_string(SmileLabel label) { return label == SmileLabel::Posed ? "posed" : "spontaneous"; }

SmileLabel parse_smile_label(std::string_view text) {
  if (text == "posed") return SmileLabel::Posed;
  if (text == "spontaneous") return SmileLabel::Spontaneous;
  throw ManifestError("unknown label '" + std::string(text) + "' (expected \"posed\" or \"spontaneous\")");
}

Plane warp_affine(const Plane& src, const AffineTransform& t, int out_w, int out_h) {
  const AffineTransform inv = t.inverse();
  Plane out(out_w, out_h);
  for (int v = 0; v < out_h; ++v) {
    for (int u = 0; u < out_w; ++u) {
      const Point2 p = inv.apply({static_cast<double>(u), static_cast<double>(v)});
      out(u, v) = static_cast<float>(src.sample(p.x, p.y));
    }
  }
  return out;
}

Frame warp_affine(const Frame& src, const AffineTransform& t, int out_w, int out_h) {
  return Frame::clamp_from(warp_affine(src.plane(), t, out_w, out_h));
}

}  // namespace facedyn
