#include <cmath>
#include <numbers>

#include "doctest.h"
#include "facedyn/normalize.hpp"
#include "fixtures.hpp"

using namespace facedyn;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Static track whose eye centers are fixed at the given positions.
TrackResult static_track(std::size_t frames, Point2 left, Point2 right, BoundingBox face) {
  TrackResult tr;
  tr.initial_face_box = face;
  tr.initial_left_eye_box = {left.x - 10, left.y - 6, 20, 12};
  tr.initial_right_eye_box = {right.x - 10, right.y - 6, 20, 12};
  for (std::size_t i = 0; i < frames; ++i) {
    TrackFrame tf;
    tf.face_corners = face.corners();
    tf.left_eye_center = left;
    tf.right_eye_center = right;
    tr.frames.push_back(tf);
  }
  return tr;
}

// Darkness-weighted centroid inside a square window.
Point2 dark_centroid(const Frame& f, Point2 around, int radius, double background) {
  double sw = 0, sx = 0, sy = 0;
  for (int y = static_cast<int>(around.y) - radius; y <= static_cast<int>(around.y) + radius; ++y)
    for (int x = static_cast<int>(around.x) - radius; x <= static_cast<int>(around.x) + radius; ++x) {
      const double w = std::max(0.0, background - f(x, y));
      sw += w;
      sx += w * x;
      sy += w * y;
    }
  return {sx / sw, sy / sw};
}

}  // namespace

TEST_CASE("canonical layout defaults") {
  const CanonicalLayout layout;
  CHECK(layout.right_eye_anchor.x - layout.left_eye_anchor.x == layout.interocular);
  CHECK(layout.left_eye_anchor.x + layout.right_eye_anchor.x == layout.out_w);
  CHECK_NOTHROW(layout.validate());
  CHECK_NOTHROW(layout.scaled(0.16).validate());
}

TEST_CASE("eye normalization is the identity when eyes sit on the anchors") {
  fixtures::SmoothTexture tex(1);
  const Frame f = fixtures::render(400, 500, tex);
  const VideoSequence v({f, f}, 50.0);
  const auto out = normalize_eye_location(v, static_track(2, {83, 165}, {317, 165}, {20, 40, 360, 420}));
  CHECK(out.video[0] == f);
  CHECK(out.video[1] == f);
}

TEST_CASE("eye similarity scale for a 117 px interocular distance") {
  const auto t = eye_similarity({100, 200}, {217, 200}, CanonicalLayout{});
  CHECK(std::abs(std::hypot(t.a, t.c) - 2.0) < 1e-9);
  CHECK(std::abs(std::sqrt(t.determinant()) - 2.0) < 1e-9);
}

TEST_CASE("tilted eye line is levelled onto the anchors") {
  const double bg = 0.8;
  const Point2 left{150, 160};
  const Point2 right = left + Point2{117 * std::cos(10 * kDeg), 117 * std::sin(10 * kDeg)};
  const Frame f = fixtures::render(400, 360, [&](double x, double y) {
    return fixtures::gaussian_blob(x, y, left.x, left.y, 4, -0.6, bg) +
           fixtures::gaussian_blob(x, y, right.x, right.y, 4, -0.6, 0.0);
  });
  const VideoSequence v({f, f, f}, 50.0);
  const CanonicalLayout layout;
  const auto out = normalize_eye_location(v, static_track(3, left, right, {100, 100, 200, 200}), layout);
  for (const auto& frame : out.video) {
    CHECK(frame.width() == 400);
    CHECK(frame.height() == 500);
    const Point2 l = dark_centroid(frame, layout.left_eye_anchor, 30, bg);
    const Point2 r = dark_centroid(frame, layout.right_eye_anchor, 30, bg);
    CHECK(distance(l, layout.left_eye_anchor) < 1.0);
    CHECK(distance(r, layout.right_eye_anchor) < 1.0);
    CHECK(std::abs(std::atan2(r.y - l.y, r.x - l.x)) < 0.2 * kDeg);
  }
  for (std::size_t i = 0; i < out.transforms.size(); ++i) {
    CHECK(distance(out.transforms[i].apply(left), layout.left_eye_anchor) < 1.0);
    CHECK(distance(out.transforms[i].apply(right), layout.right_eye_anchor) < 1.0);
  }
}

TEST_CASE("coincident eyes are reported with the frame index") {
  const VideoSequence v({fixtures::constant_frame(50, 50, 0.5f), fixtures::constant_frame(50, 50, 0.5f)}, 50.0);
  auto tr = static_track(2, {10, 10}, {30, 10}, {0, 0, 50, 50});
  tr.frames[1].right_eye_center = tr.frames[1].left_eye_center;
  try {
    normalize_eye_location(v, tr);
    FAIL("expected degenerate geometry");
  } catch (const DegenerateGeometryError& e) {
    CHECK(std::string(e.what()).find("frame 1") != std::string::npos);
  }
}

TEST_CASE("rotation angle extraction") {
  CHECK(rotation_angle(AffineTransform::scaling(2, 2)) == 0.0);
  CHECK(rotation_angle(AffineTransform::rotation(0.2) * AffineTransform::scaling(3, 3)) == doctest::Approx(0.2));
}

TEST_CASE("face orientation normalization of a static video is a fixed crop") {
  fixtures::SmoothTexture tex(2);
  const Frame f = fixtures::render(300, 300, tex);
  const VideoSequence v({f, f, f, f}, 50.0);
  const auto out = normalize_face_orientation(v, static_track(4, {120, 130}, {180, 130}, {90, 90, 120, 140}),
                                              CanonicalLayout{}.scaled(0.5));
  for (const auto& frame : out.video) {
    CHECK(frame.width() == 200);
    CHECK(frame.height() == 250);
    CHECK(fixtures::interior_max_abs_diff(frame.plane(), out.video[0].plane(), 0) < 1e-6);
  }
}

TEST_CASE("face orientation normalization undoes a rigid rotation") {
  fixtures::SmoothTexture tex(3, 12, 0.25);
  const Point2 center{128, 128};
  const BoundingBox face{78, 68, 100, 120};
  std::vector<Frame> frames;
  TrackResult tr = static_track(12, {110, 110}, {146, 110}, face);
  for (int t = 0; t < 12; ++t) {
    const auto rot = AffineTransform::rotation_about(0.5 * t * kDeg, center);
    const auto inv = rot.inverse();
    frames.push_back(fixtures::render(256, 256, [&](double x, double y) {
      const Point2 p = inv.apply({x, y});
      return tex(p.x, p.y);
    }));
    for (std::size_t c = 0; c < 4; ++c) tr.frames[t].face_corners[c] = rot.apply(face.corners()[c]);
    tr.frames[t].cumulative_transform = rot;
  }
  const VideoSequence v(std::move(frames), 50.0);
  const auto out = normalize_face_orientation(v, tr, CanonicalLayout{}.scaled(0.4));
  for (const auto& frame : out.video) {
    CHECK(fixtures::interior_mean_abs_diff(frame.plane(), out.video[0].plane(), 8) < 2e-2);
  }
  // Same check with the transforms measured by the tracker.
  const auto tracked = track_sequence(v, face, {95, 100, 30, 20}, {131, 100, 30, 20});
  const auto out2 = normalize_face_orientation(v, tracked, CanonicalLayout{}.scaled(0.4));
  for (const auto& frame : out2.video) {
    CHECK(fixtures::interior_mean_abs_diff(frame.plane(), out2.video[0].plane(), 8) < 2e-2);
  }
}

TEST_CASE("no-normalization crop is always 720x900 and static for static input") {
  fixtures::SmoothTexture tex(4);
  const Frame small = fixtures::render(100, 80, tex);
  const VideoSequence v({small, small, small}, 50.0);
  const auto out = crop_no_normalization(v, {20, 10, 50, 60});
  for (const auto& frame : out.video) {
    CHECK(frame.width() == 720);
    CHECK(frame.height() == 900);
    CHECK(frame == out.video[0]);
  }
  // Border clamping: far corners replicate the source corner pixels.
  CHECK(out.video[0](0, 0) == small(0, 0));
  CHECK(out.video[0](719, 899) == small(99, 79));
}

TEST_CASE("normalization is deterministic and honours layout sizes in every mode") {
  fixtures::SmoothTexture tex(5);
  std::vector<Frame> frames;
  for (int t = 0; t < 3; ++t) frames.push_back(fixtures::render(160, 160, [&](double x, double y) { return tex(x - t, y); }));
  const VideoSequence v(std::move(frames), 50.0);
  auto tr = static_track(3, {60, 70}, {100, 72}, {40, 40, 80, 90});
  const auto layout = CanonicalLayout{}.scaled(0.25);
  for (auto mode : {NormalizationMode::EyeLocation, NormalizationMode::FaceOrientation, NormalizationMode::NoNormalization}) {
    const auto a = normalize(mode, v, tr, layout);
    const auto b = normalize(mode, v, tr, layout);
    CHECK(a.video.frames() == b.video.frames());
    const bool crop = mode == NormalizationMode::NoNormalization;
    CHECK(a.video.width() == (crop ? layout.crop_w : layout.out_w));
    CHECK(a.video.height() == (crop ? layout.crop_h : layout.out_h));
  }
  CHECK(parse_normalization_mode(to_string(NormalizationMode::FaceOrientation)) == NormalizationMode::FaceOrientation);
  CHECK_THROWS_AS(parse_normalization_mode("sideways"), ConfigError);
}
