#include <chrono>
#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "facedyn/image_io.hpp"
#include "facedyn/pipeline.hpp"
#include "facedyn/synth.hpp"

using namespace facedyn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("facedyn_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

SynthParams small_dataset() {
  SynthParams p;
  p.videos = 20;
  p.seed = 3;
  p.min_frames = 20;
  p.max_frames = 24;
  return p;
}

PipelineConfig small_config(DescriptorKind kind, const fs::path& cache) {
  PipelineConfig cfg;
  cfg.descriptor = kind;
  cfg.layout_scale = kSynthInterocular / CanonicalLayout{}.interocular;
  cfg.temporal.target_len = 20;
  cfg.cache_dir = cache;
  return cfg;
}

// One dataset shared by the tests in this file.
const Manifest& dataset() {
  static const Manifest m = generate_synthetic_dataset(scratch("data"), small_dataset());
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TEST_CASE("config JSON round-trips and rejects unknown keys") {
  PipelineConfig cfg;
  cfg.descriptor = DescriptorKind::HOG;
  cfg.normalization = NormalizationMode::FaceOrientation;
  cfg.use_evm = true;
  cfg.magnify.alpha = 4.5;
  cfg.hog.cell = 8;
  cfg.svm.C = 0.1 + 0.2;
  cfg.layout_scale = 0.3;
  const auto text = config_to_json(cfg);
  const auto back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.svm.C == cfg.svm.C);

  CHECK(config_from_json("{}").descriptor == PipelineConfig{}.descriptor);
  CHECK(config_from_json(R"({"descriptor":"FLOW"})").descriptor == DescriptorKind::FLOW);
  CHECK_THROWS_AS(config_from_json(R"({"descriptr":"hog"})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"hog":{"cells":4}})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"descriptor":"sift"})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"svm":{"C":-1}})"), ConfigError);
  CHECK_THROWS_AS(config_from_json("[1,2"), ConfigError);
}

TEST_CASE("cache directory follows the environment variable") {
  PipelineConfig cfg;
  cfg.cache_dir = "from-file";
  ::setenv(kCacheEnvVar, "/tmp/from-env", 1);
  apply_environment(cfg);
  CHECK(cfg.cache_dir == fs::path("/tmp/from-env"));
  ::setenv(kCacheEnvVar, "", 1);
  cfg.cache_dir = "from-file";
  apply_environment(cfg);
  CHECK(cfg.cache_dir == fs::path("from-file"));
  ::unsetenv(kCacheEnvVar);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("synthetic dataset: balanced classes and stratified folds") {
  const Manifest& m = dataset();
  REQUIRE(m.records.size() == 20);
  int per_fold[kFoldCount + 1][2] = {};
  for (const auto& r : m.records) per_fold[r.fold][r.label == SmileLabel::Posed ? 0 : 1]++;
  for (int k = 1; k <= kFoldCount; ++k) {
    CHECK(per_fold[k][0] == 1);
    CHECK(per_fold[k][1] == 1);
  }
  CHECK(parse_manifest(m.base_dir / "manifest.json") == m);

  const auto a = render_synthetic_video(4, small_dataset());
  const auto b = render_synthetic_video(4, small_dataset());
  CHECK(a.video.frames() == b.video.frames());
  CHECK(a.record == b.record);
}

TEST_CASE("EXTERNAL descriptor without feature paths fails before processing") {
  const fs::path cache = scratch("external_cache");
  auto cfg = small_config(DescriptorKind::EXTERNAL, cache);
  try {
    compute_feature_vectors(dataset(), cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("external_features_path") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(cache));
}

TEST_CASE("external feature files flow through temporal normalization") {
  const fs::path dir = scratch("external");
  Manifest m = dataset();
  for (auto& r : m.records) {
    FeatureMatrix f(12, 8, DescriptorKind::EXTERNAL);
    for (std::size_t t = 0; t < 12; ++t) f(t, t % 8) = 1.0;  // unit-norm rows
    const fs::path p = dir / (r.video_id + ".fdm");
    write_feature_matrix(f, p);
    r.external_features_path = p.string();
  }
  auto cfg = small_config(DescriptorKind::EXTERNAL, dir / "cache");
  cfg.external_dim = 8;
  const auto samples = compute_feature_vectors(m, cfg);
  REQUIRE(samples.size() == 20);
  CHECK(samples[0].features.size() == 20u * 8u);

  cfg.external_dim = 16;
  CHECK_THROWS_AS(compute_feature_vectors(m, cfg), StageError);
}

TEST_CASE("stage failures name the stage and the video") {
  Manifest m = dataset();
  m.records[3].path = "does-not-exist";
  try {
    compute_feature_vectors(m, small_config(DescriptorKind::LPQ, scratch("broken_cache")));
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.video_id() == m.records[3].video_id);
    CHECK(e.stage() == "load");
  }
}

TEST_CASE("second run hits the cache for every video and is at least 10x faster") {
  const fs::path cache = scratch("lpq_cache");
  const auto cfg = small_config(DescriptorKind::LPQ, cache);
  RunStats first, second;
  auto t0 = std::chrono::steady_clock::now();
  const EvalReport a = run_cross_validation(dataset(), cfg, 1, &first);
  const double cold = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const EvalReport b = run_cross_validation(dataset(), cfg, 1, &second);
  const double warm = seconds_since(t0);

  CHECK(first.stages_computed == 4 * 20);  // track, normalize, extract, temporal
  CHECK(first.stages_cached == 0);
  CHECK(second.stages_computed == 0);
  CHECK(second.stages_cached == 20);  // the final stage short-circuits the rest
  CHECK(report_csv(a) == report_csv(b));
  CHECK(warm * 10.0 <= cold);
  MESSAGE("cold " << cold << " s, warm " << warm << " s");

  for (const char* stage : {"track", "normalize", "extract", "temporal"})
    CHECK(std::distance(fs::directory_iterator(cache / stage), fs::directory_iterator{}) >= 20);
  CHECK(a.aggregate.total() == 20);
}

TEST_CASE("changing one stage parameter recomputes only downstream stages") {
  const fs::path cache = scratch("reuse_cache");
  auto cfg = small_config(DescriptorKind::LPQ, cache);
  RunStats s1, s2;
  compute_feature_vectors(dataset(), cfg, 1, &s1);
  cfg.descriptor = DescriptorKind::HOG;
  compute_feature_vectors(dataset(), cfg, 1, &s2);
  CHECK(s2.stages_computed == 2 * 20);  // extract, temporal
  CHECK(s2.stages_cached == 20);        // normalized sequences reused
}

TEST_CASE("reports do not depend on worker count or on cache state") {
  auto cfg = small_config(DescriptorKind::HOG, scratch("jobs1"));
  const auto serial = report_csv(run_cross_validation(dataset(), cfg, 1));
  cfg.cache_dir = scratch("jobs3");
  const auto parallel = report_csv(run_cross_validation(dataset(), cfg, 3));
  const auto parallel_cached = report_csv(run_cross_validation(dataset(), cfg, 3));
  CHECK(serial == parallel);
  CHECK(parallel == parallel_cached);
}

TEST_CASE("EVM and flow stages produce vectors of the documented size") {
  auto cfg = small_config(DescriptorKind::FLOW, scratch("flow_cache"));
  cfg.use_evm = true;
  Manifest one = dataset();
  // Only the sample dimension is inspected; keep one video per fold.
  std::vector<ManifestRecord> keep;
  for (int k = 1; k <= kFoldCount; ++k)
    for (const auto& r : one.records)
      if (r.fold == k) {
        keep.push_back(r);
        break;
      }
  one.records = keep;
  RunStats stats;
  const auto samples = compute_feature_vectors(one, cfg, 1, &stats);
  CHECK(stats.stages_computed == 5 * 10);
  CHECK(samples[0].features.size() == static_cast<std::size_t>(cfg.temporal.target_len) * kFlowRegionDim);
}

TEST_CASE("normalized regions follow the tracked eyes") {
  TrackResult track;
  track.initial_left_eye_box = {10, 20, 14, 10};
  track.initial_right_eye_box = {40, 20, 14, 10};
  TrackFrame f;
  f.left_eye_center = {17, 25};
  f.right_eye_center = {47, 25};
  track.frames = {f, f};
  const auto scale2 = AffineTransform::scaling(2, 2);
  const std::vector<AffineTransform> transforms{AffineTransform::identity(), scale2};
  const auto regions = normalized_regions(track, transforms);
  REQUIRE(regions.size() == 2);
  CHECK(regions[0].left_eye == track.initial_left_eye_box);
  CHECK(regions[1].left_eye.center() == Point2{34, 50});
  CHECK(regions[1].left_eye.w == doctest::Approx(28));
  CHECK_THROWS_AS(normalized_regions(track, std::vector<AffineTransform>{scale2}), DimensionError);
}

TEST_CASE("transforms JSON is lossless") {
  const std::vector<AffineTransform> t{AffineTransform::rotation(0.1 + 0.2), AffineTransform::translation(1e-17, 3)};
  CHECK(transforms_from_json(transforms_to_json(t)) == t);
  CHECK_THROWS_AS(transforms_from_json("{\"transforms\":[[1,2]]}"), FormatError);
}
