#pragma once

#include <cstdint>
#include <filesystem>

#include "facedyn/core.hpp"
#include "facedyn/manifest.hpp"

namespace facedyn {

// Procedural smile videos: a textured face drifting and rotating slowly while a
// dark mouth curve bends upward. Posed videos rise to the apex in a few frames,
// spontaneous ones over many.
struct SynthParams {
  int videos = 60;  // half posed, half spontaneous
  std::uint32_t seed = 1;
  int width = 128;
  int height = 128;
  double fps = kDefaultFps;
  int min_frames = 60;
  int max_frames = 80;
  int posed_onset = 5;         // frames, before jitter
  int spontaneous_onset = 25;  // frames, before jitter

  void validate() const;  // throws ConfigError
};

// Interocular distance of the generated faces in pixels; a layout scale of
// kSynthInterocular / 234 keeps the normalized faces at native resolution.
inline constexpr double kSynthInterocular = 28.0;

struct SynthVideo {
  VideoSequence video;
  ManifestRecord record;  // path left empty; fold 1
};

// The `index`-th video of the dataset described by `params`.
SynthVideo render_synthetic_video(int index, const SynthParams& params);

// Writes <dir>/<video_id>/frame_%06d.png for every video and <dir>/manifest.json
// with stratified folds drawn from params.seed.
Manifest generate_synthetic_dataset(const std::filesystem::path& dir, const SynthParams& params);

// Reassigns folds 1..10: each class is shuffled with `seed` and dealt round-robin,
// continuing the rotation across classes so fold sizes differ by at most one.
void assign_stratified_folds(Manifest& manifest, std::uint32_t seed);

}  // namespace facedyn
