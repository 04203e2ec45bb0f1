#include "facedyn/normalize.hpp"

#include <cmath>
#include <string>

namespace facedyn {

std::string_view to_string(NormalizationMode mode) {
  switch (mode) {
    case NormalizationMode::EyeLocation:
      return "eye_location";
    case NormalizationMode::FaceOrientation:
      return "face_orientation";
    case NormalizationMode::NoNormalization:
      return "none";
  }
  return "none";
}

NormalizationMode parse_normalization_mode(std::string_view text) {
  if (text == "eye_location" || text == "eye") return NormalizationMode::EyeLocation;
  if (text == "face_orientation" || text == "face") return NormalizationMode::FaceOrientation;
  if (text == "none") return NormalizationMode::NoNormalization;
  throw ConfigError("unknown normalization mode '" + std::string(text) + "'");
}

CanonicalLayout CanonicalLayout::scaled(double factor) const {
  CanonicalLayout s = *this;
  s.out_w = static_cast<int>(std::lround(out_w * factor));
  s.out_h = static_cast<int>(std::lround(out_h * factor));
  s.crop_w = static_cast<int>(std::lround(crop_w * factor));
  s.crop_h = static_cast<int>(std::lround(crop_h * factor));
  s.interocular = interocular * factor;
  s.left_eye_anchor = factor * left_eye_anchor;
  s.right_eye_anchor = factor * right_eye_anchor;
  s.face_width_target = face_width_target * factor;
  return s;
}

void CanonicalLayout::validate() const {
  if (out_w <= 0 || out_h <= 0 || crop_w <= 0 || crop_h <= 0) throw ConfigError("layout sizes must be positive");
  if (!(interocular > 0.0) || !(face_width_target > 0.0)) throw ConfigError("layout lengths must be positive");
  if (std::abs((right_eye_anchor.x - left_eye_anchor.x) - interocular) > 1e-9 * interocular ||
      left_eye_anchor.y != right_eye_anchor.y) {
    throw ConfigError("eye anchors must be level and one interocular distance apart");
  }
}

AffineTransform eye_similarity(Point2 left_eye, Point2 right_eye, const CanonicalLayout& layout) {
  // Complex-number form: z' = q z + t with q = (R' - L') / (R - L).
  const double sx = right_eye.x - left_eye.x, sy = right_eye.y - left_eye.y;
  const double dx = layout.right_eye_anchor.x - layout.left_eye_anchor.x;
  const double dy = layout.right_eye_anchor.y - layout.left_eye_anchor.y;
  const double norm = sx * sx + sy * sy;
  if (!(norm > 1e-18)) throw DegenerateGeometryError("eye centers coincide");
  const double qa = (dx * sx + dy * sy) / norm;
  const double qb = (dy * sx - dx * sy) / norm;
  AffineTransform t{qa, -qb, 0.0, qb, qa, 0.0};
  t.tx = layout.left_eye_anchor.x - (qa * left_eye.x - qb * left_eye.y);
  t.ty = layout.left_eye_anchor.y - (qb * left_eye.x + qa * left_eye.y);
  return t;
}

double rotation_angle(const AffineTransform& t) { return std::atan2(t.c, t.a); }

namespace {

void require_track(const VideoSequence& video, const TrackResult& track) {
  if (track.frames.size() != video.size()) {
    throw DimensionError("track has " + std::to_string(track.frames.size()) + " frames, video has " +
                         std::to_string(video.size()));
  }
}

NormalizedVideo warp_all(const VideoSequence& video, std::vector<AffineTransform> transforms, int w, int h) {
  std::vector<Frame> frames;
  frames.reserve(video.size());
  for (std::size_t i = 0; i < video.size(); ++i) frames.push_back(warp_affine(video[i], transforms[i], w, h));
  return {VideoSequence(std::move(frames), video.fps()), std::move(transforms)};
}

}  // namespace

NormalizedVideo normalize_eye_location(const VideoSequence& video, const TrackResult& track,
                                       const CanonicalLayout& layout) {
  require_track(video, track);
  std::vector<AffineTransform> transforms;
  for (std::size_t i = 0; i < video.size(); ++i) {
    try {
      transforms.push_back(eye_similarity(track.frames[i].left_eye_center, track.frames[i].right_eye_center, layout));
    } catch (const DegenerateGeometryError& e) {
      throw DegenerateGeometryError("frame " + std::to_string(i) + ": " + e.what());
    }
  }
  return warp_all(video, std::move(transforms), layout.out_w, layout.out_h);
}

NormalizedVideo normalize_face_orientation(const VideoSequence& video, const TrackResult& track,
                                           const CanonicalLayout& layout) {
  require_track(video, track);
  if (!track.initial_face_box.valid()) throw DegenerateGeometryError("track has no initial face box");
  const double scale = layout.face_width_target / track.initial_face_box.w;
  const Point2 out_center{0.5 * layout.out_w, 0.5 * layout.out_h};
  std::vector<AffineTransform> transforms;
  for (const auto& tf : track.frames) {
    const double theta = rotation_angle(tf.cumulative_transform);
    const Point2 c = tf.face_center();
    transforms.push_back(AffineTransform::translation(out_center.x, out_center.y) *
                         AffineTransform::scaling(scale, scale) * AffineTransform::rotation(-theta) *
                         AffineTransform::translation(-c.x, -c.y));
  }
  return warp_all(video, std::move(transforms), layout.out_w, layout.out_h);
}

NormalizedVideo crop_no_normalization(const VideoSequence& video, const BoundingBox& face_box_frame0,
                                      const CanonicalLayout& layout) {
  if (!face_box_frame0.valid()) throw DegenerateGeometryError("face box must have positive size");
  const Point2 c = face_box_frame0.center();
  const auto t = AffineTransform::translation(0.5 * layout.crop_w - c.x, 0.5 * layout.crop_h - c.y);
  return warp_all(video, std::vector<AffineTransform>(video.size(), t), layout.crop_w, layout.crop_h);
}

NormalizedVideo normalize(NormalizationMode mode, const VideoSequence& video, const TrackResult& track,
                          const CanonicalLayout& layout) {
  switch (mode) {
    case NormalizationMode::EyeLocation:
      return normalize_eye_location(video, track, layout);
    case NormalizationMode::FaceOrientation:
      return normalize_face_orientation(video, track, layout);
    case NormalizationMode::NoNormalization:
      return crop_no_normalization(video, track.initial_face_box, layout);
  }
  throw ConfigError("unknown normalization mode");
}

}  // namespace facedyn
