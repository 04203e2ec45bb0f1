#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facedyn/classify.hpp"
#include "facedyn/eval.hpp"
#include "facedyn/features.hpp"
#include "facedyn/magnify.hpp"
#include "facedyn/manifest.hpp"
#include "facedyn/normalize.hpp"
#include "facedyn/temporal.hpp"
#include "facedyn/tracking.hpp"

namespace facedyn {

inline constexpr const char* kCacheEnvVar = "FACEDYN_CACHE";

struct PipelineConfig {
  NormalizationMode normalization = NormalizationMode::EyeLocation;
  bool use_evm = false;
  DescriptorKind descriptor = DescriptorKind::LPQ;
  TrackingParams tracking;
  MagnifyParams magnify;
  LpqParams lpq;
  HogParams hog;
  FlowParams flow;
  TemporalConfig temporal;
  TrainConfig svm;
  double layout_scale = 1.0;  // applied to CanonicalLayout
  std::size_t external_dim = 4096;
  std::filesystem::path cache_dir = "facedyn-cache";

  CanonicalLayout layout() const { return CanonicalLayout{}.scaled(layout_scale); }
  void validate() const;  // throws ConfigError
};

// Every key is optional; unknown keys are rejected. Layout:
// {"normalization", "use_evm", "descriptor", "layout_scale", "external_dim", "cache_dir",
//  "tracking": {...}, "magnify": {...}, "lpq": {...}, "hog": {...}, "flow": {...},
//  "temporal": {"target_len"}, "svm": {"C", "tol", "max_iter"}}
PipelineConfig config_from_json(const std::string& text, PipelineConfig base = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
// Canonical serialization. The cache directory is left out unless requested so
// that the echo in reports does not depend on where artifacts live.
std::string config_to_json(const PipelineConfig& cfg, bool include_cache_dir = false);
// cache_dir := $FACEDYN_CACHE when set and non-empty.
void apply_environment(PipelineConfig& cfg);

// Raised for any failure inside a per-video stage.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string video_id, const std::string& what)
      : Error(stage + " [" + video_id + "]: " + what), stage_(std::move(stage)), video_id_(std::move(video_id)) {}
  const std::string& stage() const { return stage_; }
  const std::string& video_id() const { return video_id_; }

 private:
  std::string stage_;
  std::string video_id_;
};

// ------------------------------------------------------------ stages

TrackResult track_video(const VideoSequence& video, const ManifestRecord& record, const TrackingParams& params = {});

// Tracked eye boxes carried into normalized coordinates, one layout per frame.
std::vector<RegionLayout> normalized_regions(const TrackResult& track, std::span<const AffineTransform> transforms);

// T x D per-frame descriptors (T - 1 rows for FLOW, which needs `regions`).
FeatureMatrix extract_descriptors(const VideoSequence& video, DescriptorKind kind, const PipelineConfig& cfg,
                                  std::span<const RegionLayout> regions = {});

// 1 x (L * D): length-normalized coefficients flattened column-major.
FeatureMatrix temporal_vector(const FeatureMatrix& per_frame, const TemporalConfig& cfg);

// {"transforms": [[a, b, tx, c, d, ty], ...]}, reals written losslessly.
std::string transforms_to_json(std::span<const AffineTransform> transforms);
std::vector<AffineTransform> transforms_from_json(const std::string& text);

// ------------------------------------------------------------ cache

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

struct RunStats {
  std::size_t videos = 0;
  std::size_t stages_computed = 0;
  std::size_t stages_cached = 0;  // stage outputs found on disk
};

// Artifacts live at <root>/<stage>/<video_id>-<16 hex digits>.<ext>.
class ArtifactCache {
 public:
  explicit ArtifactCache(std::filesystem::path root) : root_(std::move(root)) {}
  std::filesystem::path path(std::string_view stage, const std::string& video_id, std::uint64_t key,
                             std::string_view ext) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

// ------------------------------------------------------------ orchestration

// Checks the manifest and the config, including EXTERNAL feature paths,
// before any video is touched.
void validate_pipeline_inputs(const Manifest& manifest, const PipelineConfig& cfg);

// Final feature vector of every record, in manifest order. Each stage output is
// written to the cache and read back, so cached and fresh runs agree exactly.
std::vector<LabeledSample> compute_feature_vectors(const Manifest& manifest, const PipelineConfig& cfg, int jobs = 1,
                                                   RunStats* stats = nullptr);

EvalReport run_cross_validation(const Manifest& manifest, const PipelineConfig& cfg, int jobs = 1,
                                RunStats* stats = nullptr);

// report.csv and report.md inside `dir`.
void write_reports(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace facedyn
