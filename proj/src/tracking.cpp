#include "facedyn/tracking.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "facedyn/imgproc.hpp"
#include "json.hpp"

namespace facedyn {

std::size_t TrackedPoints::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

Point2 TrackFrame::face_center() const {
  Point2 c{0.0, 0.0};
  for (const auto& p : face_corners) c = c + 0.25 * p;
  return c;
}

namespace {

struct Eigen2 {
  double min, max;
};

Eigen2 symmetric_eigenvalues(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double radius = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return {mean - radius, mean + radius};
}

struct PixelRange {
  int x0, y0, x1, y1;  // inclusive
  bool empty() const { return x1 < x0 || y1 < y0; }
};

PixelRange intersect(const BoundingBox& box, int w, int h) {
  return {std::max(0, static_cast<int>(std::ceil(box.x))), std::max(0, static_cast<int>(std::ceil(box.y))),
          std::min(w - 1, static_cast<int>(std::floor(box.x + box.w))),
          std::min(h - 1, static_cast<int>(std::floor(box.y + box.h)))};
}

using Pyramid = std::vector<Plane>;

Pyramid build_lk_pyramid(const Plane& base, int levels) {
  Pyramid pyr{base};
  for (int l = 1; l < levels; ++l) pyr.push_back(imgproc::pyr_down(pyr.back()));
  return pyr;
}

struct LkContext {
  Pyramid prev, next, grad_x, grad_y;
};

LkContext make_context(const Frame& prev, const Frame& next, int levels) {
  LkContext ctx;
  ctx.prev = build_lk_pyramid(prev.plane(), levels);
  ctx.next = build_lk_pyramid(next.plane(), levels);
  for (const auto& p : ctx.prev) {
    ctx.grad_x.push_back(imgproc::gradient_x(p));
    ctx.grad_y.push_back(imgproc::gradient_y(p));
  }
  return ctx;
}

TrackedPoints lk_track_with(const LkContext& ctx, const TrackedPoints& pts, const LkParams& params) {
  const int half = params.window / 2;
  const int n = params.window * params.window;
  const int levels = static_cast<int>(ctx.prev.size());
  const Plane& prev0 = ctx.prev[0];
  const Plane& next0 = ctx.next[0];
  TrackedPoints out = pts;
  std::vector<double> iv(n), gx(n), gy(n);

  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (!pts.valid[k]) continue;
    const Point2 pos = pts.positions[k];
    Point2 guess{0.0, 0.0};
    Point2 disp{0.0, 0.0};
    bool ok = true;
    for (int level = levels - 1; level >= 0 && ok; --level) {
      const double scale = std::ldexp(1.0, -level);
      const Point2 p = scale * pos;
      const Plane& I = ctx.prev[level];
      const Plane& J = ctx.next[level];
      double g11 = 0.0, g12 = 0.0, g22 = 0.0;
      for (int j = -half, idx = 0; j <= half; ++j) {
        for (int i = -half; i <= half; ++i, ++idx) {
          iv[idx] = I.sample(p.x + i, p.y + j);
          gx[idx] = ctx.grad_x[level].sample(p.x + i, p.y + j);
          gy[idx] = ctx.grad_y[level].sample(p.x + i, p.y + j);
          g11 += gx[idx] * gx[idx];
          g12 += gx[idx] * gy[idx];
          g22 += gy[idx] * gy[idx];
        }
      }
      const auto eig = symmetric_eigenvalues(g11, g12, g22);
      if (!(eig.min > 1e-12 * std::max(1.0, eig.max)) || eig.max / eig.min > params.max_condition) {
        ok = false;
        break;
      }
      const double det = g11 * g22 - g12 * g12;
      Point2 v{0.0, 0.0};
      for (int it = 0; it < params.max_iterations; ++it) {
        double b1 = 0.0, b2 = 0.0;
        const Point2 q = p + guess + v;
        for (int j = -half, idx = 0; j <= half; ++j) {
          for (int i = -half; i <= half; ++i, ++idx) {
            const double diff = iv[idx] - J.sample(q.x + i, q.y + j);
            b1 += diff * gx[idx];
            b2 += diff * gy[idx];
          }
        }
        const Point2 eta{(g22 * b1 - g12 * b2) / det, (g11 * b2 - g12 * b1) / det};
        v = v + eta;
        if (std::hypot(eta.x, eta.y) < params.epsilon) break;
      }
      if (level > 0) {
        guess = 2.0 * (guess + v);
      } else {
        disp = guess + v;
      }
    }
    if (!ok) {
      out.valid[k] = 0;
      continue;
    }
    const Point2 moved = pos + disp;
    out.positions[k] = moved;
    const bool inside = moved.x - half >= 0.0 && moved.y - half >= 0.0 && moved.x + half <= next0.width() - 1 &&
                        moved.y + half <= next0.height() - 1 && std::isfinite(moved.x) && std::isfinite(moved.y);
    if (!inside) {
      out.valid[k] = 0;
      continue;
    }
    double residual = 0.0;
    for (int j = -half; j <= half; ++j)
      for (int i = -half; i <= half; ++i)
        residual += std::abs(prev0.sample(pos.x + i, pos.y + j) - next0.sample(moved.x + i, moved.y + j));
    if (residual / n > params.max_residual) out.valid[k] = 0;
  }
  return out;
}

bool collinear(std::span<const Point2> pts) {
  Point2 mean{0.0, 0.0};
  for (const auto& p : pts) mean = mean + (1.0 / pts.size()) * p;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : pts) {
    const Point2 d = p - mean;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
  }
  const auto eig = symmetric_eigenvalues(sxx, sxy, syy);
  return !(eig.max > 0.0) || eig.min <= 1e-10 * eig.max;
}

AffineTransform least_squares_affine(std::span<const Point2> src, std::span<const Point2> dst) {
  const auto n = static_cast<Eigen::Index>(src.size());
  Point2 mean{0.0, 0.0};
  for (const auto& p : src) mean = mean + (1.0 / src.size()) * p;
  Eigen::MatrixXd design(n, 3);
  Eigen::MatrixXd rhs(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = src[i].x - mean.x;
    design(i, 1) = src[i].y - mean.y;
    design(i, 2) = 1.0;
    rhs(i, 0) = dst[i].x;
    rhs(i, 1) = dst[i].y;
  }
  const Eigen::MatrixXd sol = design.colPivHouseholderQr().solve(rhs);
  AffineTransform t{sol(0, 0), sol(1, 0), 0.0, sol(0, 1), sol(1, 1), 0.0};
  t.tx = sol(2, 0) - t.a * mean.x - t.b * mean.y;
  t.ty = sol(2, 1) - t.c * mean.x - t.d * mean.y;
  return t;
}

}  // namespace

TrackedPoints detect_features(const Frame& frame, const BoundingBox& box, int max_n,
                              const FeatureDetectorParams& params) {
  const PixelRange roi = intersect(box, frame.width(), frame.height());
  if (!box.valid() || roi.empty()) throw DegenerateGeometryError("feature box does not intersect the frame");
  TrackedPoints result;
  if (max_n <= 0) return result;

  // Work on the box plus a margin covering the Sobel and Gaussian supports;
  // inside the box this equals filtering the whole frame.
  const int margin = 1 + params.window / 2 + 1;
  const int cx0 = std::max(0, roi.x0 - margin), cy0 = std::max(0, roi.y0 - margin);
  const int cx1 = std::min(frame.width() - 1, roi.x1 + margin), cy1 = std::min(frame.height() - 1, roi.y1 + margin);
  const int cw = cx1 - cx0 + 1, ch = cy1 - cy0 + 1;
  Plane crop(cw, ch);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x) crop(x, y) = frame(cx0 + x, cy0 + y);

  const Plane ix = imgproc::sobel_x(crop);
  const Plane iy = imgproc::sobel_y(crop);
  Plane xx(cw, ch), xy(cw, ch), yy(cw, ch);
  for (std::size_t i = 0; i < crop.size(); ++i) {
    xx.data()[i] = ix.data()[i] * ix.data()[i];
    xy.data()[i] = ix.data()[i] * iy.data()[i];
    yy.data()[i] = iy.data()[i] * iy.data()[i];
  }
  const Plane sxx = imgproc::gaussian_blur(xx, params.window, params.sigma);
  const Plane sxy = imgproc::gaussian_blur(xy, params.window, params.sigma);
  const Plane syy = imgproc::gaussian_blur(yy, params.window, params.sigma);
  Plane response(cw, ch);
  for (std::size_t i = 0; i < crop.size(); ++i) {
    response.data()[i] = static_cast<float>(symmetric_eigenvalues(sxx.data()[i], sxy.data()[i], syy.data()[i]).min);
  }

  float max_response = 0.0f;
  for (int y = roi.y0; y <= roi.y1; ++y)
    for (int x = roi.x0; x <= roi.x1; ++x) max_response = std::max(max_response, response(x - cx0, y - cy0));
  if (!(max_response > 1e-12f)) return result;
  const float threshold = static_cast<float>(params.quality * max_response);

  struct Candidate {
    float score;
    int x, y;
  };
  std::vector<Candidate> candidates;
  for (int y = roi.y0; y <= roi.y1; ++y) {
    for (int x = roi.x0; x <= roi.x1; ++x) {
      const float r = response(x - cx0, y - cy0);
      if (r <= threshold) continue;
      bool local_max = true;
      for (int dy = -1; dy <= 1 && local_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (response.clamped(x - cx0 + dx, y - cy0 + dy) > r) {
            local_max = false;
            break;
          }
      if (local_max) candidates.push_back({r, x, y});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  const double min_d2 = params.min_distance * params.min_distance;
  for (const auto& c : candidates) {
    const Point2 p{static_cast<double>(c.x), static_cast<double>(c.y)};
    const bool far = std::all_of(result.positions.begin(), result.positions.end(), [&](const Point2& q) {
      return (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) >= min_d2;
    });
    if (!far) continue;
    result.positions.push_back(p);
    result.valid.push_back(1);
    if (static_cast<int>(result.size()) == max_n) break;
  }
  return result;
}

TrackedPoints lk_track(const Frame& prev, const Frame& next, const TrackedPoints& pts, const LkParams& params) {
  if (prev.width() != next.width() || prev.height() != next.height()) {
    throw DimensionError("lk_track: frames differ in size");
  }
  if (pts.positions.size() != pts.valid.size()) throw DimensionError("lk_track: positions/status length mismatch");
  return lk_track_with(make_context(prev, next, params.levels), pts, params);
}

AffineTransform estimate_affine(std::span<const Point2> old_pts, std::span<const Point2> new_pts) {
  if (old_pts.size() != new_pts.size()) throw DimensionError("estimate_affine: point lists differ in length");
  if (old_pts.size() < 3) throw DegenerateGeometryError("estimate_affine: need at least 3 point pairs");
  if (collinear(old_pts)) throw DegenerateGeometryError("estimate_affine: points are collinear");

  const AffineTransform first = least_squares_affine(old_pts, new_pts);
  std::vector<double> residuals(old_pts.size());
  for (std::size_t i = 0; i < old_pts.size(); ++i) residuals[i] = distance(first.apply(old_pts[i]), new_pts[i]);
  std::vector<double> sorted = residuals;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = (m % 2) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  const double cutoff = std::max(3.0 * median, 1e-9);

  std::vector<Point2> kept_old, kept_new;
  for (std::size_t i = 0; i < old_pts.size(); ++i) {
    if (residuals[i] <= cutoff) {
      kept_old.push_back(old_pts[i]);
      kept_new.push_back(new_pts[i]);
    }
  }
  if (kept_old.size() == old_pts.size() || kept_old.size() < 3 || collinear(kept_old)) return first;
  return least_squares_affine(kept_old, kept_new);
}

TrackResult track_sequence(const VideoSequence& video, const BoundingBox& face_box, const BoundingBox& left_eye_box,
                           const BoundingBox& right_eye_box, const TrackingParams& params) {
  if (!face_box.valid() || !left_eye_box.valid() || !right_eye_box.valid()) {
    throw DegenerateGeometryError("track_sequence: boxes must have positive size");
  }
  TrackResult result;
  result.initial_face_box = face_box;
  result.initial_left_eye_box = left_eye_box;
  result.initial_right_eye_box = right_eye_box;

  TrackedPoints pts = detect_features(video[0], face_box, params.max_points, params.detector);
  if (pts.valid_count() < 3) throw TrackingLostError(0, "fewer than 3 features in the initial face box");

  const auto corners0 = face_box.corners();
  const Point2 left0 = left_eye_box.center(), right0 = right_eye_box.center();
  TrackFrame first;
  first.face_corners = corners0;
  first.left_eye_center = left0;
  first.right_eye_center = right0;
  first.tracked_points = pts.valid_count();
  result.frames.push_back(first);

  AffineTransform cumulative;
  for (std::size_t t = 1; t < video.size(); ++t) {
    const int frame_index = static_cast<int>(t);
    const TrackedPoints moved = lk_track_with(make_context(video[t - 1], video[t], params.lk.levels), pts, params.lk);
    std::vector<Point2> old_valid, new_valid;
    TrackedPoints survivors;
    for (std::size_t k = 0; k < moved.size(); ++k) {
      if (!moved.valid[k]) continue;
      old_valid.push_back(pts.positions[k]);
      new_valid.push_back(moved.positions[k]);
      survivors.positions.push_back(moved.positions[k]);
      survivors.valid.push_back(1);
    }
    if (old_valid.size() < 3) {
      throw TrackingLostError(frame_index, std::to_string(old_valid.size()) + " features survived");
    }
    const AffineTransform step = estimate_affine(old_valid, new_valid);
    cumulative = step * cumulative;

    TrackFrame tf;
    for (std::size_t c = 0; c < 4; ++c) tf.face_corners[c] = cumulative.apply(corners0[c]);
    tf.left_eye_center = cumulative.apply(left0);
    tf.right_eye_center = cumulative.apply(right0);
    tf.frame_transform = step;
    tf.cumulative_transform = cumulative;
    tf.tracked_points = survivors.size();
    result.frames.push_back(tf);

    pts = std::move(survivors);
    if (static_cast<int>(pts.size()) < params.redetect_below) {
      const BoundingBox box = bounding_box_of(tf.face_corners);
      TrackedPoints fresh;
      try {
        fresh = detect_features(video[t], box, params.max_points, params.detector);
      } catch (const DegenerateGeometryError&) {
        fresh = {};
      }
      if (fresh.valid_count() < 3) throw TrackingLostError(frame_index, "re-detection found fewer than 3 features");
      pts = std::move(fresh);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {
using nlohmann::json;

json transform_json(const AffineTransform& t) { return json::array({t.a, t.b, t.tx, t.c, t.d, t.ty}); }
AffineTransform transform_from(const json& j) {
  if (!j.is_array() || j.size() != 6) throw FormatError("transform must be a 6-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
          j[3].get<double>(), j[4].get<double>(), j[5].get<double>()};
}
json point_json(Point2 p) { return json::array({p.x, p.y}); }
Point2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw FormatError("point must be a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}
json box_json(const BoundingBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }
BoundingBox box_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
}
}  // namespace

std::string track_to_json(const TrackResult& track) {
  json frames = json::array();
  for (const auto& f : track.frames) {
    json corners = json::array();
    for (const auto& c : f.face_corners) corners.push_back(point_json(c));
    frames.push_back({{"face_corners", corners},
                      {"left_eye", point_json(f.left_eye_center)},
                      {"right_eye", point_json(f.right_eye_center)},
                      {"frame_transform", transform_json(f.frame_transform)},
                      {"cumulative_transform", transform_json(f.cumulative_transform)},
                      {"points", f.tracked_points}});
  }
  json doc = {{"initial",
               {{"face_box", box_json(track.initial_face_box)},
                {"left_eye_box", box_json(track.initial_left_eye_box)},
                {"right_eye_box", box_json(track.initial_right_eye_box)}}},
              {"frames", frames}};
  return doc.dump() + "\n";
}

TrackResult track_from_json(const std::string& text) {
  TrackResult r;
  try {
    const json doc = json::parse(text);
    r.initial_face_box = box_from(doc.at("initial").at("face_box"));
    r.initial_left_eye_box = box_from(doc.at("initial").at("left_eye_box"));
    r.initial_right_eye_box = box_from(doc.at("initial").at("right_eye_box"));
    for (const auto& f : doc.at("frames")) {
      TrackFrame tf;
      const auto& corners = f.at("face_corners");
      if (!corners.is_array() || corners.size() != 4) throw FormatError("face_corners must hold 4 points");
      for (std::size_t c = 0; c < 4; ++c) tf.face_corners[c] = point_from(corners[c]);
      tf.left_eye_center = point_from(f.at("left_eye"));
      tf.right_eye_center = point_from(f.at("right_eye"));
      tf.frame_transform = transform_from(f.at("frame_transform"));
      tf.cumulative_transform = transform_from(f.at("cumulative_transform"));
      tf.tracked_points = f.value("points", std::size_t{0});
      r.frames.push_back(tf);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed track file: ") + e.what());
  }
  return r;
}

}  // namespace facedyn
