#include "facedyn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "facedyn/image_io.hpp"

namespace facedyn {

void SynthParams::validate() const {
  if (videos < 2) throw ConfigError("synthetic dataset needs at least 2 videos");
  if (width < 96 || height < 96) throw ConfigError("synthetic frames must be at least 96x96");
  if (!(fps > 0.0)) throw ConfigError("synthetic fps must be positive");
  if (min_frames < 10 || max_frames < min_frames) throw ConfigError("synthetic frame range must satisfy 10 <= min <= max");
  if (posed_onset < 1 || spontaneous_onset < 1) throw ConfigError("onset durations must be positive");
}

namespace {

// Platform-independent draws (std distributions are implementation-defined).
class Draw {
 public:
  Draw(std::uint32_t seed, int index) {
    std::seed_seq seq{seed, static_cast<std::uint32_t>(index), 0x51a7u};
    rng_.seed(seq);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * (rng_() / 4294967296.0); }
  int integer(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<std::uint32_t>(hi - lo + 1)); }

 private:
  std::mt19937 rng_;
};

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

struct Wave {
  double fx, fy, phase, amp;
};

// Smile intensity in [0, 1]: rest, onset ramp, apex, offset ramp.
struct SmileCurve {
  double start, onset, apex, offset, peak;
  double operator()(double t) const {
    if (t < start) return 0.0;
    if (t < start + onset) return peak * smoothstep(0.0, 1.0, (t - start) / onset);
    if (t < start + onset + apex) return peak;
    return peak * (1.0 - smoothstep(0.0, 1.0, (t - start - onset - apex) / offset));
  }
};

constexpr double kFaceA = 34.0, kFaceB = 44.0;  // ellipse semi-axes
constexpr double kEyeDx = 0.5 * kSynthInterocular, kEyeDy = -12.0;
constexpr double kMouthY = 18.0;

}  // namespace

SynthVideo render_synthetic_video(int index, const SynthParams& p) {
  p.validate();
  Draw draw(p.seed, index);
  const SmileLabel label = index % 2 == 0 ? SmileLabel::Posed : SmileLabel::Spontaneous;
  const int frames = draw.integer(p.min_frames, p.max_frames);

  std::vector<Wave> skin, bg;
  for (int i = 0; i < 6; ++i)
    skin.push_back({draw.uniform(-0.5, 0.5), draw.uniform(-0.5, 0.5), draw.uniform(0, 2 * std::numbers::pi), 0.025});
  for (int i = 0; i < 4; ++i)
    bg.push_back({draw.uniform(-0.3, 0.3), draw.uniform(-0.3, 0.3), draw.uniform(0, 2 * std::numbers::pi), 0.04});
  const double face_gain = draw.uniform(0.9, 1.1);

  const Point2 c0{0.5 * p.width + draw.uniform(-4, 4), 0.5 * p.height + draw.uniform(-4, 4)};
  const Point2 vel{draw.uniform(-0.08, 0.08), draw.uniform(-0.08, 0.08)};
  const double theta0 = draw.uniform(-0.05, 0.05);
  const double omega = draw.uniform(-0.0015, 0.0015);  // rad per frame
  const double wobble = draw.uniform(0.0, 0.6), wobble_period = draw.uniform(20, 40);

  const bool posed = label == SmileLabel::Posed;
  const double base_onset = posed ? p.posed_onset : p.spontaneous_onset;
  SmileCurve smile{draw.uniform(4, 8), std::max(1.0, base_onset * draw.uniform(0.8, 1.2)),
                   draw.uniform(14, 20), posed ? draw.uniform(4, 8) : draw.uniform(20, 30),
                   posed ? draw.uniform(0.85, 1.0) : draw.uniform(0.75, 1.0)};

  auto face_pose = [&](int t) {
    const Point2 c{c0.x + vel.x * t + wobble * std::sin(2 * std::numbers::pi * t / wobble_period), c0.y + vel.y * t};
    return std::pair{c, theta0 + omega * t};
  };

  std::vector<Frame> out;
  out.reserve(frames);
  for (int t = 0; t < frames; ++t) {
    const auto [c, theta] = face_pose(t);
    const double s = smile(t);
    const double cs = std::cos(theta), sn = std::sin(theta);
    const double mouth_half = 13.0 + 3.0 * s;
    std::vector<float> px(static_cast<std::size_t>(p.width) * p.height);
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x) {
        double value = 0.3;
        for (const auto& w : bg) value += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
        // Face coordinates: rotate the offset from the face center by -theta.
        const double dx = x - c.x, dy = y - c.y;
        const double u = cs * dx + sn * dy, v = -sn * dx + cs * dy;
        const double q = std::sqrt((u / kFaceA) * (u / kFaceA) + (v / kFaceB) * (v / kFaceB));
        const double face = smoothstep(-0.75, 0.75, (1.0 - q) * kFaceA);
        if (face > 0.0) {
          double skin_v = 0.62;
          for (const auto& w : skin) skin_v += w.amp * std::sin(w.fx * u + w.fy * v + w.phase);
          for (double ex : {-kEyeDx, kEyeDx}) {
            const double er = std::hypot((u - ex) / 6.0, (v - kEyeDy) / 3.5);
            skin_v -= 0.35 * smoothstep(-0.15, 0.15, 1.0 - er);
            skin_v -= 0.15 * smoothstep(-0.3, 0.3, 1.0 - std::hypot(u - ex, v - kEyeDy) / 1.8);
          }
          const double curve = kMouthY + 1.5 * s - 8.0 * s * (u / mouth_half) * (u / mouth_half);
          const double d = v - curve;
          skin_v -= 0.4 * std::exp(-d * d / (2.0 * 1.3 * 1.3)) * smoothstep(-1.0, 1.0, mouth_half - std::abs(u));
          value = (1.0 - face) * value + face * face_gain * skin_v;
        }
        px[static_cast<std::size_t>(y) * p.width + x] = static_cast<float>(std::clamp(value, 0.0, 1.0));
      }
    out.emplace_back(p.width, p.height, std::move(px));
  }

  // Frame-0 boxes: eyes 14x10 around the eye centers, face box inside the ellipse.
  const auto [c, theta] = face_pose(0);
  const AffineTransform to_image = AffineTransform::translation(c.x, c.y) * AffineTransform::rotation(theta);
  auto eye_box = [&](double ex) {
    const Point2 e = to_image.apply({ex, kEyeDy});
    return BoundingBox{e.x - 7.0, e.y - 5.0, 14.0, 10.0};
  };
  std::array<Point2, 4> corners{Point2{-26, -32}, Point2{26, -32}, Point2{26, 32}, Point2{-26, 32}};
  for (auto& q : corners) q = to_image.apply(q);

  char id[32];
  std::snprintf(id, sizeof id, "synth_%03d", index);
  ManifestRecord r;
  r.video_id = id;
  r.label = label;
  r.fold = 1;
  r.fps = p.fps;
  r.face_box = bounding_box_of(corners);
  // Eye centers map to the left and right of the image for small angles.
  r.left_eye_box = eye_box(-kEyeDx);
  r.right_eye_box = eye_box(kEyeDx);
  return {VideoSequence(std::move(out), p.fps), r};
}

void assign_stratified_folds(Manifest& manifest, std::uint32_t seed) {
  std::mt19937 rng(seed);
  int slot = 0;
  for (SmileLabel label : {SmileLabel::Posed, SmileLabel::Spontaneous}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < manifest.records.size(); ++i)
      if (manifest.records[i].label == label) idx.push_back(i);
    for (std::size_t k = idx.size(); k > 1; --k) std::swap(idx[k - 1], idx[rng() % static_cast<std::uint32_t>(k)]);
    for (std::size_t i : idx) manifest.records[i].fold = slot++ % kFoldCount + 1;
  }
}

Manifest generate_synthetic_dataset(const std::filesystem::path& dir, const SynthParams& params) {
  params.validate();
  Manifest manifest;
  manifest.base_dir = dir;
  for (int i = 0; i < params.videos; ++i) {
    SynthVideo v = render_synthetic_video(i, params);
    save_sequence(v.video, dir / v.record.video_id, ImageFormat::Png);
    v.record.path = v.record.video_id;
    manifest.records.push_back(std::move(v.record));
  }
  assign_stratified_folds(manifest, params.seed);
  write_manifest(manifest, dir / "manifest.json");
  return manifest;
}

}  // namespace facedyn
