#include "facedyn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "facedyn/image_io.hpp"
#include "json.hpp"

namespace facedyn {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ------------------------------------------------------------ config

void PipelineConfig::validate() const {
  magnify.validate(std::numeric_limits<double>::infinity());  // Nyquist is checked per video
  lpq.validate();
  hog.validate();
  flow.validate();
  temporal.validate();
  svm.validate();
  if (!(layout_scale > 0.0) || !std::isfinite(layout_scale)) throw ConfigError("layout_scale must be positive");
  layout().validate();
  if (external_dim == 0) throw ConfigError("external_dim must be positive");
  if (tracking.max_points < 3) throw ConfigError("tracking max_points must be >= 3");
  if (tracking.redetect_below < 0) throw ConfigError("tracking redetect_below must be >= 0");
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, _] : obj.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* known) { return k == known; }) == keys.end())
      throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

template <class T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

ordered_json tracking_json(const TrackingParams& t) {
  return {{"max_points", t.max_points},
          {"redetect_below", t.redetect_below},
          {"quality", t.detector.quality},
          {"min_distance", t.detector.min_distance},
          {"lk_levels", t.lk.levels},
          {"lk_window", t.lk.window}};
}

ordered_json magnify_json(const MagnifyParams& m) {
  return {{"alpha", m.alpha}, {"f_lo", m.f_lo}, {"f_hi", m.f_hi}, {"levels", m.levels}, {"lambda_c", m.lambda_c}};
}

ordered_json lpq_json(const LpqParams& p) { return {{"window", p.window}, {"rho", p.rho}}; }
ordered_json hog_json(const HogParams& p) { return {{"cell", p.cell}, {"orientations", p.orientations}}; }
ordered_json flow_json(const FlowParams& p) {
  return {{"pyramid_levels", p.pyramid_levels}, {"pyramid_scale", p.pyramid_scale}, {"poly_n", p.poly_n},
          {"poly_sigma", p.poly_sigma},         {"iterations", p.iterations},       {"avg_window", p.avg_window}};
}

ordered_json box_json(const BoundingBox& b) { return ordered_json::array({b.x, b.y, b.w, b.h}); }

}  // namespace

PipelineConfig config_from_json(const std::string& text, PipelineConfig cfg) {
  try {
    const json j = json::parse(text);
    reject_unknown(j,
                   {"normalization", "use_evm", "descriptor", "layout_scale", "external_dim", "cache_dir", "tracking",
                    "magnify", "lpq", "hog", "flow", "temporal", "svm"},
                   "pipeline config");
    if (j.contains("normalization")) cfg.normalization = parse_normalization_mode(j.at("normalization").get<std::string>());
    if (j.contains("descriptor")) cfg.descriptor = parse_descriptor_kind(j.at("descriptor").get<std::string>());
    read_opt(j, "use_evm", cfg.use_evm);
    read_opt(j, "layout_scale", cfg.layout_scale);
    read_opt(j, "external_dim", cfg.external_dim);
    if (j.contains("cache_dir")) cfg.cache_dir = j.at("cache_dir").get<std::string>();
    if (j.contains("tracking")) {
      const auto& t = j.at("tracking");
      reject_unknown(t, {"max_points", "redetect_below", "quality", "min_distance", "lk_levels", "lk_window"}, "tracking");
      read_opt(t, "max_points", cfg.tracking.max_points);
      read_opt(t, "redetect_below", cfg.tracking.redetect_below);
      read_opt(t, "quality", cfg.tracking.detector.quality);
      read_opt(t, "min_distance", cfg.tracking.detector.min_distance);
      read_opt(t, "lk_levels", cfg.tracking.lk.levels);
      read_opt(t, "lk_window", cfg.tracking.lk.window);
    }
    if (j.contains("magnify")) {
      const auto& m = j.at("magnify");
      reject_unknown(m, {"alpha", "f_lo", "f_hi", "levels", "lambda_c"}, "magnify");
      read_opt(m, "alpha", cfg.magnify.alpha);
      read_opt(m, "f_lo", cfg.magnify.f_lo);
      read_opt(m, "f_hi", cfg.magnify.f_hi);
      read_opt(m, "levels", cfg.magnify.levels);
      read_opt(m, "lambda_c", cfg.magnify.lambda_c);
    }
    if (j.contains("lpq")) {
      const auto& p = j.at("lpq");
      reject_unknown(p, {"window", "rho"}, "lpq");
      read_opt(p, "window", cfg.lpq.window);
      read_opt(p, "rho", cfg.lpq.rho);
    }
    if (j.contains("hog")) {
      const auto& p = j.at("hog");
      reject_unknown(p, {"cell", "orientations"}, "hog");
      read_opt(p, "cell", cfg.hog.cell);
      read_opt(p, "orientations", cfg.hog.orientations);
    }
    if (j.contains("flow")) {
      const auto& p = j.at("flow");
      reject_unknown(p, {"pyramid_levels", "pyramid_scale", "poly_n", "poly_sigma", "iterations", "avg_window"}, "flow");
      read_opt(p, "pyramid_levels", cfg.flow.pyramid_levels);
      read_opt(p, "pyramid_scale", cfg.flow.pyramid_scale);
      read_opt(p, "poly_n", cfg.flow.poly_n);
      read_opt(p, "poly_sigma", cfg.flow.poly_sigma);
      read_opt(p, "iterations", cfg.flow.iterations);
      read_opt(p, "avg_window", cfg.flow.avg_window);
    }
    if (j.contains("temporal")) {
      const auto& p = j.at("temporal");
      reject_unknown(p, {"target_len"}, "temporal");
      read_opt(p, "target_len", cfg.temporal.target_len);
    }
    if (j.contains("svm")) {
      const auto& p = j.at("svm");
      reject_unknown(p, {"C", "tol", "max_iter"}, "svm");
      read_opt(p, "C", cfg.svm.C);
      read_opt(p, "tol", cfg.svm.tol);
      read_opt(p, "max_iter", cfg.svm.max_iter);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid pipeline config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  try {
    return config_from_json(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const PipelineConfig& cfg, bool include_cache_dir) {
  ordered_json j = {{"normalization", to_string(cfg.normalization)},
                    {"use_evm", cfg.use_evm},
                    {"descriptor", to_string(cfg.descriptor)},
                    {"layout_scale", cfg.layout_scale},
                    {"external_dim", cfg.external_dim},
                    {"tracking", tracking_json(cfg.tracking)},
                    {"magnify", magnify_json(cfg.magnify)},
                    {"lpq", lpq_json(cfg.lpq)},
                    {"hog", hog_json(cfg.hog)},
                    {"flow", flow_json(cfg.flow)},
                    {"temporal", {{"target_len", cfg.temporal.target_len}}},
                    {"svm", {{"C", cfg.svm.C}, {"tol", cfg.svm.tol}, {"max_iter", cfg.svm.max_iter}}}};
  if (include_cache_dir) j["cache_dir"] = cfg.cache_dir.string();
  return j.dump();
}

void apply_environment(PipelineConfig& cfg) {
  if (const char* env = std::getenv(kCacheEnvVar); env != nullptr && *env != '\0') cfg.cache_dir = env;
}

// ------------------------------------------------------------ stages

TrackResult track_video(const VideoSequence& video, const ManifestRecord& record, const TrackingParams& params) {
  return track_sequence(video, record.face_box, record.left_eye_box, record.right_eye_box, params);
}

std::vector<RegionLayout> normalized_regions(const TrackResult& track, std::span<const AffineTransform> transforms) {
  if (track.frames.size() != transforms.size()) {
    throw DimensionError("track has " + std::to_string(track.frames.size()) + " frames but " +
                         std::to_string(transforms.size()) + " transforms were given");
  }
  std::vector<RegionLayout> out;
  out.reserve(transforms.size());
  for (std::size_t t = 0; t < transforms.size(); ++t) {
    const TrackFrame& f = track.frames[t];
    // Eye boxes keep their frame-0 size scaled by the combined linear gain.
    const double gain = std::sqrt(std::abs(transforms[t].determinant() * f.cumulative_transform.determinant()));
    auto box = [&](Point2 center, const BoundingBox& initial) {
      const Point2 c = transforms[t].apply(center);
      const double w = initial.w * gain, h = initial.h * gain;
      return BoundingBox{c.x - 0.5 * w, c.y - 0.5 * h, w, h};
    };
    out.push_back(RegionLayout::from_eyes(box(f.left_eye_center, track.initial_left_eye_box),
                                          box(f.right_eye_center, track.initial_right_eye_box)));
  }
  return out;
}

FeatureMatrix extract_descriptors(const VideoSequence& video, DescriptorKind kind, const PipelineConfig& cfg,
                                  std::span<const RegionLayout> regions) {
  std::vector<double> data;
  std::size_t rows = 0, cols = 0;
  auto append = [&](std::vector<double> row) {
    if (rows == 0) cols = row.size();
    data.insert(data.end(), row.begin(), row.end());
    ++rows;
  };
  switch (kind) {
    case DescriptorKind::LPQ:
      for (const Frame& f : video) append(lpq_descriptor(f, cfg.lpq));
      break;
    case DescriptorKind::HOG:
      for (const Frame& f : video) append(hog_descriptor(f, cfg.hog));
      break;
    case DescriptorKind::FLOW:
      if (regions.size() != video.size()) {
        throw DimensionError("flow extraction needs one region layout per frame (" + std::to_string(video.size()) +
                             "), got " + std::to_string(regions.size()));
      }
      for (std::size_t t = 0; t + 1 < video.size(); ++t)
        append(extract_flow_regions(farneback_flow(video[t], video[t + 1], cfg.flow), regions[t]));
      break;
    case DescriptorKind::EXTERNAL:
      throw ConfigError("external features are read from files, not extracted");
  }
  return FeatureMatrix(rows, cols, std::move(data), kind);
}

FeatureMatrix temporal_vector(const FeatureMatrix& per_frame, const TemporalConfig& cfg) {
  auto v = flatten(normalize_length(per_frame, cfg));
  const std::size_t n = v.size();
  return FeatureMatrix(1, n, std::move(v), per_frame.kind());
}

std::string transforms_to_json(std::span<const AffineTransform> transforms) {
  json arr = json::array();
  for (const auto& t : transforms) arr.push_back({t.a, t.b, t.tx, t.c, t.d, t.ty});
  return json{{"transforms", arr}}.dump() + "\n";
}

std::vector<AffineTransform> transforms_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    std::vector<AffineTransform> out;
    for (const auto& e : j.at("transforms")) {
      const auto v = e.get<std::vector<double>>();
      if (v.size() != 6) throw FormatError("transform entries need 6 values");
      out.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt transforms file: ") + e.what());
  }
}

// ------------------------------------------------------------ cache

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::filesystem::path ArtifactCache::path(std::string_view stage, const std::string& video_id, std::uint64_t key,
                                          std::string_view ext) const {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(key));
  return root_ / std::string(stage) / (video_id + "-" + hex + "." + std::string(ext));
}

// ------------------------------------------------------------ orchestration

void validate_pipeline_inputs(const Manifest& manifest, const PipelineConfig& cfg) {
  cfg.validate();
  validate_manifest(manifest);
  std::set<int> folds;
  for (const auto& r : manifest.records) folds.insert(r.fold);
  for (int k = 1; k <= kFoldCount; ++k)
    if (!folds.count(k)) throw ManifestError("fold " + std::to_string(k) + " has no videos");
  if (cfg.descriptor == DescriptorKind::EXTERNAL) {
    std::string missing;
    std::size_t count = 0;
    for (const auto& r : manifest.records) {
      if (r.external_features_path && !r.external_features_path->empty()) continue;
      if (count++ < 5) missing += (missing.empty() ? "" : ", ") + r.video_id;
    }
    if (count > 0) {
      throw ConfigError("descriptor 'external' needs external_features_path in every record; " +
                        std::to_string(count) + " record(s) lack it (" + missing + (count > 5 ? ", ..." : "") + ")");
    }
  }
  if (cfg.use_evm) {
    for (const auto& r : manifest.records) {
      try {
        cfg.magnify.validate(r.fps);
      } catch (const ConfigError& e) {
        throw ConfigError(r.video_id + ": " + e.what());
      }
    }
  }
}

namespace {

std::string hex_key(std::uint64_t k) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(k));
  return hex;
}

std::uint64_t key_of(const ordered_json& j) { return fnv1a64(j.dump()); }

struct StageKeys {
  std::uint64_t track = 0, normalize = 0, magnify = 0, extract = 0, temporal = 0;
};

StageKeys stage_keys(const Manifest& manifest, const ManifestRecord& r, const PipelineConfig& cfg,
                     const std::string& external_bytes_hash) {
  StageKeys k;
  if (cfg.descriptor == DescriptorKind::EXTERNAL) {
    k.extract = key_of({{"stage", "external"},
                        {"video_id", r.video_id},
                        {"path", manifest.resolve(*r.external_features_path).string()},
                        {"content", external_bytes_hash},
                        {"dim", cfg.external_dim}});
  } else {
    k.track = key_of({{"stage", "track"},
                      {"video_id", r.video_id},
                      {"path", manifest.resolve(r.path).string()},
                      {"fps", r.fps},
                      {"face", box_json(r.face_box)},
                      {"left_eye", box_json(r.left_eye_box)},
                      {"right_eye", box_json(r.right_eye_box)},
                      {"params", tracking_json(cfg.tracking)}});
    const CanonicalLayout l = cfg.layout();
    k.normalize = key_of({{"stage", "normalize"},
                          {"prev", hex_key(k.track)},
                          {"mode", to_string(cfg.normalization)},
                          {"layout",
                           {l.out_w, l.out_h, l.crop_w, l.crop_h, l.interocular, l.left_eye_anchor.x,
                            l.left_eye_anchor.y, l.right_eye_anchor.x, l.right_eye_anchor.y, l.face_width_target}}});
    k.magnify = cfg.use_evm ? key_of({{"stage", "magnify"}, {"prev", hex_key(k.normalize)}, {"params", magnify_json(cfg.magnify)}})
                            : k.normalize;
    ordered_json params;
    if (cfg.descriptor == DescriptorKind::LPQ) params = lpq_json(cfg.lpq);
    if (cfg.descriptor == DescriptorKind::HOG) params = hog_json(cfg.hog);
    if (cfg.descriptor == DescriptorKind::FLOW) params = flow_json(cfg.flow);
    k.extract = key_of({{"stage", "extract"},
                        {"prev", hex_key(k.magnify)},
                        {"descriptor", to_string(cfg.descriptor)},
                        {"params", params}});
  }
  k.temporal = key_of({{"stage", "temporal"}, {"prev", hex_key(k.extract)}, {"target_len", cfg.temporal.target_len}});
  return k;
}

// Per-video lazy evaluation: each getter returns the cached artifact when it
// exists and otherwise computes it from the previous stage, writes it and
// reads it back.
class VideoJob {
 public:
  VideoJob(const Manifest& manifest, const ManifestRecord& record, const PipelineConfig& cfg, const ArtifactCache& cache)
      : manifest_(manifest), r_(record), cfg_(cfg), cache_(cache) {}

  // Rethrows any failure as a StageError naming the stage and video.
  template <class F>
  auto guard(const char* stage, F&& f) {
    try {
      return f();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, r_.video_id, e.what());
    }
  }

  std::vector<double> run() {
    if (cfg_.descriptor == DescriptorKind::EXTERNAL) {
      guard("extract", [&] { external_bytes_ = read_file(manifest_.resolve(*r_.external_features_path)); });
      keys_ = stage_keys(manifest_, r_, cfg_, hex_key(fnv1a64(external_bytes_)));
    } else {
      keys_ = stage_keys(manifest_, r_, cfg_, {});
    }
    const FeatureMatrix v = temporal();
    return {v.data().begin(), v.data().end()};
  }

  std::size_t computed = 0, cached = 0;

 private:
  bool hit(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) return false;
    ++cached;
    return true;
  }

  const VideoSequence& raw() {
    if (!raw_) raw_ = guard("load", [&] { return load_sequence(manifest_.resolve(r_.path), r_.fps); });
    return *raw_;
  }

  const TrackResult& track() {
    if (track_) return *track_;
    const auto p = cache_.path("track", r_.video_id, keys_.track, "json");
    if (!hit(p)) {
      guard("track", [&] {
        write_file_atomic(p, track_to_json(track_video(raw(), r_, cfg_.tracking)));
        ++computed;
      });
    }
    track_ = guard("track", [&] { return track_from_json(read_file(p)); });
    return *track_;
  }

  const VideoSequence& normalized() {
    if (normalized_) return *normalized_;
    const auto p = cache_.path("normalize", r_.video_id, keys_.normalize, "fsq");
    const auto pt = cache_.path("normalize", r_.video_id, keys_.normalize, "json");
    if (!(std::filesystem::exists(pt) && hit(p))) {
      const TrackResult& t = track();
      guard("normalize", [&] {
        const NormalizedVideo n = normalize(cfg_.normalization, raw(), t, cfg_.layout());
        write_sequence_binary(n.video, p);
        write_file_atomic(pt, transforms_to_json(n.transforms));
        ++computed;
      });
    }
    guard("normalize", [&] {
      normalized_ = read_sequence_binary(p);
      transforms_ = transforms_from_json(read_file(pt));
    });
    return *normalized_;
  }

  const VideoSequence& magnified() {
    if (!cfg_.use_evm) return normalized();
    if (magnified_) return *magnified_;
    const auto p = cache_.path("magnify", r_.video_id, keys_.magnify, "fsq");
    if (!hit(p)) {
      const VideoSequence& n = normalized();
      guard("magnify", [&] {
        write_sequence_binary(magnify_sequence(n, cfg_.magnify), p);
        ++computed;
      });
    }
    magnified_ = guard("magnify", [&] { return read_sequence_binary(p); });
    return *magnified_;
  }

  FeatureMatrix features() {
    if (cfg_.descriptor == DescriptorKind::EXTERNAL) {
      return guard("extract",
                   [&] { return ingest_external_features(manifest_.resolve(*r_.external_features_path), cfg_.external_dim); });
    }
    const auto p = cache_.path("extract", r_.video_id, keys_.extract, "fdm");
    if (!hit(p)) {
      const VideoSequence& v = magnified();
      std::vector<RegionLayout> regions;
      if (cfg_.descriptor == DescriptorKind::FLOW) {
        normalized();  // populates transforms_
        regions = guard("extract", [&] { return normalized_regions(track(), transforms_); });
      }
      guard("extract", [&] {
        write_feature_matrix(extract_descriptors(v, cfg_.descriptor, cfg_, regions), p);
        ++computed;
      });
    }
    return guard("extract", [&] { return read_feature_matrix(p, cfg_.descriptor); });
  }

  FeatureMatrix temporal() {
    const auto p = cache_.path("temporal", r_.video_id, keys_.temporal, "fdm");
    if (!hit(p)) {
      const FeatureMatrix f = features();
      guard("temporal", [&] {
        write_feature_matrix(temporal_vector(f, cfg_.temporal), p);
        ++computed;
      });
    }
    return guard("temporal", [&] { return read_feature_matrix(p, cfg_.descriptor); });
  }

  const Manifest& manifest_;
  const ManifestRecord& r_;
  const PipelineConfig& cfg_;
  const ArtifactCache& cache_;
  StageKeys keys_;
  std::string external_bytes_;
  std::optional<VideoSequence> raw_, normalized_, magnified_;
  std::optional<TrackResult> track_;
  std::vector<AffineTransform> transforms_;
};

}  // namespace

std::vector<LabeledSample> compute_feature_vectors(const Manifest& manifest, const PipelineConfig& cfg, int jobs,
                                                   RunStats* stats) {
  validate_pipeline_inputs(manifest, cfg);
  const ArtifactCache cache(cfg.cache_dir);
  const std::size_t n = manifest.records.size();
  std::vector<LabeledSample> samples(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::atomic<std::size_t> computed{0}, cached{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::size_t failure_index = n;

  auto worker = [&] {
    for (std::size_t i = next++; i < n && !stop; i = next++) {
      const ManifestRecord& r = manifest.records[i];
      try {
        VideoJob job(manifest, r, cfg, cache);
        samples[i] = {r.video_id, r.label, r.fold, job.run()};
        computed += job.computed;
        cached += job.cached;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failure_index) {
          failure_index = i;
          failure = std::current_exception();
        }
        stop = true;
      }
    }
  };
  const int threads = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  if (stats) {
    stats->videos = n;
    stats->stages_computed = computed;
    stats->stages_cached = cached;
  }
  return samples;
}

EvalReport run_cross_validation(const Manifest& manifest, const PipelineConfig& cfg, int jobs, RunStats* stats) {
  auto samples = compute_feature_vectors(manifest, cfg, jobs, stats);
  EvalReport report = cross_validate(samples, cfg.svm, jobs);
  report.config = config_to_json(cfg);
  report.descriptor = cfg.descriptor;
  report.normalization = cfg.normalization;
  report.evm = cfg.use_evm;
  return report;
}

void write_reports(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  emit_report(report, dir / "report.csv", ReportFormat::Csv);
  emit_report(report, dir / "report.md", ReportFormat::Markdown);
}

}  // namespace facedyn
