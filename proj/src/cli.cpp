#include "facedyn/cli.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>

#include "CLI11.hpp"
#include "facedyn/image_io.hpp"
#include "facedyn/pipeline.hpp"
#include "facedyn/synth.hpp"

namespace facedyn {

namespace fs = std::filesystem;

namespace {

// FSQ1 when the path ends in .fsq, otherwise a frame directory.
bool is_binary_sequence(const fs::path& p) { return p.extension() == ".fsq"; }

VideoSequence read_video(const fs::path& p, double fps) {
  return is_binary_sequence(p) ? read_sequence_binary(p) : load_sequence(p, fps);
}

void write_video(const VideoSequence& v, const fs::path& p) {
  if (is_binary_sequence(p)) write_sequence_binary(v, p);
  else save_sequence(v, p, ImageFormat::Png);
}

fs::path model_path(const fs::path& dir, int fold) { return dir / ("model_fold_" + std::to_string(fold) + ".json"); }

std::vector<LabeledSample> read_vectors(const Manifest& manifest, const fs::path& dir) {
  std::vector<LabeledSample> out;
  for (const auto& r : manifest.records) {
    const FeatureMatrix m = read_feature_matrix(dir / (r.video_id + ".fdm"));
    out.push_back({r.video_id, r.label, r.fold, {m.data().begin(), m.data().end()}});
  }
  return out;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", v);
  return buf;
}

// Options shared by subcommands that build a PipelineConfig. Values given on
// the command line override the config file.
struct ConfigFlags {
  std::string config_path;
  std::string normalization, descriptor, cache;
  bool evm = false, no_evm = false;
  double layout_scale = 0.0;
  int target_len = 0;
  double svm_c = 0.0;

  void attach(CLI::App* sub, bool full) {
    sub->add_option("--config", config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
    sub->add_option("--layout-scale", layout_scale, "Scale of the canonical face layout")->check(CLI::PositiveNumber);
    if (!full) return;
    sub->add_option("--normalization", normalization, "eye_location | face_orientation | none");
    sub->add_option("--descriptor", descriptor, "lpq | hog | flow | external");
    sub->add_flag("--evm", evm, "Enable Eulerian magnification");
    sub->add_flag("--no-evm", no_evm, "Disable Eulerian magnification");
    sub->add_option("--cache", cache, "Artifact cache directory");
    sub->add_option("--length", target_len, "Temporal length L")->check(CLI::PositiveNumber);
    sub->add_option("--C", svm_c, "SVM regularization")->check(CLI::PositiveNumber);
  }

  PipelineConfig build() const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_pipeline_config(config_path);
    apply_environment(cfg);
    if (!normalization.empty()) cfg.normalization = parse_normalization_mode(normalization);
    if (!descriptor.empty()) cfg.descriptor = parse_descriptor_kind(descriptor);
    if (evm && no_evm) throw ConfigError("--evm and --no-evm are mutually exclusive");
    if (evm) cfg.use_evm = true;
    if (no_evm) cfg.use_evm = false;
    if (!cache.empty()) cfg.cache_dir = cache;
    if (layout_scale > 0.0) cfg.layout_scale = layout_scale;
    if (target_len > 0) cfg.temporal.target_len = target_len;
    if (svm_c > 0.0) cfg.svm.C = svm_c;
    cfg.validate();
    return cfg;
  }
};

struct MagnifyFlags {
  MagnifyParams p;
  void attach(CLI::App* sub) {
    sub->add_option("--alpha", p.alpha, "Amplification factor")->capture_default_str();
    sub->add_option("--f-lo", p.f_lo, "Lower band edge, Hz")->capture_default_str();
    sub->add_option("--f-hi", p.f_hi, "Upper band edge, Hz")->capture_default_str();
    sub->add_option("--levels", p.levels, "Pyramid levels")->capture_default_str();
    sub->add_option("--lambda-c", p.lambda_c, "Spatial wavelength cutoff, px")->capture_default_str();
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Posed versus spontaneous smile classification from face videos", "facedyn"};
  app.require_subcommand(1, 1);
  app.fallthrough();  // --jobs may follow the subcommand
  int jobs = 1;
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::function<void()> action;
  std::string stage;  // error prefix

  // ---- track
  std::string manifest_path, video_id, out_path, track_path, transforms_path, in_path, mode;
  auto* track = app.add_subcommand("track", "Track the face of one manifest video");
  ConfigFlags track_cfg;
  track->add_option("--manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  track->add_option("--id", video_id, "video_id of the record")->required();
  track->add_option("--out", out_path, "Track JSON output")->required();
  track_cfg.attach(track, false);
  track->callback([&] {
    action = [&] {
      const Manifest m = parse_manifest(manifest_path);
      const ManifestRecord& r = m.find(video_id);
      const PipelineConfig cfg = track_cfg.build();
      const TrackResult t = track_video(load_sequence(m.resolve(r.path), r.fps), r, cfg.tracking);
      write_file_atomic(out_path, track_to_json(t));
      out << "tracked " << t.frames.size() << " frames -> " << out_path << "\n";
    };
  });

  // ---- normalize
  auto* norm = app.add_subcommand("normalize", "Geometrically normalize one manifest video");
  ConfigFlags norm_cfg;
  norm->add_option("--manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  norm->add_option("--id", video_id, "video_id of the record")->required();
  norm->add_option("--track", track_path, "Track JSON from `track`")->required()->check(CLI::ExistingFile);
  norm->add_option("--mode", mode, "eye_location | face_orientation | none");
  norm->add_option("--out", out_path, "Frame directory, or .fsq file")->required();
  norm->add_option("--transforms-out", transforms_path, "Per-frame transforms JSON");
  norm_cfg.attach(norm, false);
  norm->callback([&] {
    action = [&] {
      const Manifest m = parse_manifest(manifest_path);
      const ManifestRecord& r = m.find(video_id);
      PipelineConfig cfg = norm_cfg.build();
      if (!mode.empty()) cfg.normalization = parse_normalization_mode(mode);
      const TrackResult t = track_from_json(read_file(track_path));
      const NormalizedVideo n = normalize(cfg.normalization, load_sequence(m.resolve(r.path), r.fps), t, cfg.layout());
      write_video(n.video, out_path);
      if (!transforms_path.empty()) write_file_atomic(transforms_path, transforms_to_json(n.transforms));
      out << "normalized " << n.video.size() << " frames (" << n.video.width() << "x" << n.video.height() << ") -> "
          << out_path << "\n";
    };
  });

  // ---- magnify
  double fps = kDefaultFps;
  auto* mag = app.add_subcommand("magnify", "Eulerian magnification of a sequence");
  MagnifyFlags mag_flags;
  mag->add_option("--in", in_path, "Frame directory or .fsq file")->required()->check(CLI::ExistingPath);
  mag->add_option("--out", out_path, "Frame directory or .fsq file")->required();
  mag->add_option("--fps", fps, "Frame rate of a frame directory")->capture_default_str();
  mag_flags.attach(mag);
  mag->callback([&] {
    action = [&] {
      const VideoSequence v = magnify_sequence(read_video(in_path, fps), mag_flags.p);
      write_video(v, out_path);
      out << "magnified " << v.size() << " frames -> " << out_path << "\n";
    };
  });

  // ---- extract
  std::string descriptor;
  auto* ext = app.add_subcommand("extract", "Per-frame descriptors of a normalized sequence");
  ConfigFlags ext_cfg;
  ext->add_option("--in", in_path, "Frame directory, .fsq file, or FDM1 file for external")
      ->required()
      ->check(CLI::ExistingPath);
  ext->add_option("--descriptor", descriptor, "lpq | hog | flow | external")->required();
  ext->add_option("--out", out_path, "FDM1 output")->required();
  ext->add_option("--fps", fps, "Frame rate of a frame directory")->capture_default_str();
  ext->add_option("--track", track_path, "Track JSON (flow)")->check(CLI::ExistingFile);
  ext->add_option("--transforms", transforms_path, "Transforms JSON from `normalize` (flow)")->check(CLI::ExistingFile);
  ext_cfg.attach(ext, false);
  ext->callback([&] {
    action = [&] {
      const PipelineConfig cfg = ext_cfg.build();
      const DescriptorKind kind = parse_descriptor_kind(descriptor);
      FeatureMatrix m;
      if (kind == DescriptorKind::EXTERNAL) {
        m = ingest_external_features(in_path, cfg.external_dim);
      } else {
        const VideoSequence v = read_video(in_path, fps);
        std::vector<RegionLayout> regions;
        if (kind == DescriptorKind::FLOW) {
          if (track_path.empty() || transforms_path.empty())
            throw ConfigError("flow extraction needs --track and --transforms");
          regions = normalized_regions(track_from_json(read_file(track_path)),
                                       transforms_from_json(read_file(transforms_path)));
        }
        m = extract_descriptors(v, kind, cfg, regions);
      }
      write_feature_matrix(m, out_path);
      out << "extracted " << m.rows() << "x" << m.cols() << " " << to_string(kind) << " -> " << out_path << "\n";
    };
  });

  // ---- temporal
  int length = TemporalConfig{}.target_len;
  auto* tmp = app.add_subcommand("temporal", "DCT length normalization and flattening");
  tmp->add_option("--in", in_path, "FDM1 per-frame descriptors")->required()->check(CLI::ExistingFile);
  tmp->add_option("--out", out_path, "FDM1 1 x (L*D) vector")->required();
  tmp->add_option("--length", length, "Temporal length L")->capture_default_str();
  tmp->callback([&] {
    action = [&] {
      const FeatureMatrix v = temporal_vector(read_feature_matrix(in_path), TemporalConfig{length});
      write_feature_matrix(v, out_path);
      out << "temporal vector of " << v.cols() << " values -> " << out_path << "\n";
    };
  });

  // ---- train
  std::string vectors_dir, models_dir, model_path_opt;
  int test_fold = 0;
  auto* train = app.add_subcommand("train", "Train a linear SVM on temporal vectors");
  ConfigFlags train_cfg;
  train->add_option("--manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--vectors", vectors_dir, "Directory of <video_id>.fdm vectors")->required()->check(CLI::ExistingDirectory);
  train->add_option("--test-fold", test_fold, "Hold out this fold (0 trains on everything)")->check(CLI::Range(0, kFoldCount));
  train->add_option("--out", out_path, "Model JSON, or a directory with --all-folds")->required();
  bool all_folds = false;
  train->add_flag("--all-folds", all_folds, "Write model_fold_<k>.json for k = 1..10 into --out");
  train_cfg.attach(train, true);
  train->callback([&] {
    action = [&] {
      const Manifest m = parse_manifest(manifest_path);
      const PipelineConfig cfg = train_cfg.build();
      const auto samples = read_vectors(m, vectors_dir);
      if (all_folds) {
        for (int k = 1; k <= kFoldCount; ++k) save_model(train_excluding_fold(samples, k, cfg.svm), model_path(out_path, k));
        out << "trained " << kFoldCount << " fold models -> " << out_path << "\n";
      } else {
        save_model(train_excluding_fold(samples, test_fold, cfg.svm), out_path);
        out << "trained model (held-out fold " << test_fold << ") -> " << out_path << "\n";
      }
    };
  });

  // ---- evaluate
  auto* eval = app.add_subcommand("evaluate", "Evaluate trained models on held-out folds");
  ConfigFlags eval_cfg;
  eval->add_option("--manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--vectors", vectors_dir, "Directory of <video_id>.fdm vectors")->required()->check(CLI::ExistingDirectory);
  auto* model_opt = eval->add_option("--model", model_path_opt, "Single model JSON")->check(CLI::ExistingFile);
  auto* models_opt = eval->add_option("--models", models_dir, "Directory of model_fold_<k>.json")->check(CLI::ExistingDirectory);
  model_opt->excludes(models_opt);
  eval->add_option("--test-fold", test_fold, "Fold to test with --model")->check(CLI::Range(1, kFoldCount));
  eval->add_option("--out", out_path, "CSV file (--model) or report directory (--models)")->required();
  eval_cfg.attach(eval, true);
  eval->callback([&] {
    action = [&] {
      const Manifest m = parse_manifest(manifest_path);
      const auto samples = read_vectors(m, vectors_dir);
      if (!model_path_opt.empty()) {
        if (test_fold == 0) throw ConfigError("--model needs --test-fold");
        EvalReport r;
        r.folds.assign(kFoldCount, {});
        r.folds[test_fold - 1] = evaluate_fold(load_model(model_path_opt), samples, test_fold);
        r.aggregate = r.folds[test_fold - 1];
        emit_report(r, out_path, ReportFormat::Csv);
        out << "fold " << test_fold << ": overall " << percent(r.aggregate.overall_accuracy()) << "\n";
        return;
      }
      if (models_dir.empty()) throw ConfigError("evaluate needs --model or --models");
      const PipelineConfig cfg = eval_cfg.build();
      EvalReport r;
      for (int k = 1; k <= kFoldCount; ++k) {
        r.folds.push_back(evaluate_fold(load_model(model_path(models_dir, k)), samples, k));
        r.aggregate += r.folds.back();
      }
      r.config = config_to_json(cfg);
      r.descriptor = cfg.descriptor;
      r.normalization = cfg.normalization;
      r.evm = cfg.use_evm;
      write_reports(r, out_path);
      out << "overall " << percent(r.aggregate.overall_accuracy()) << " -> " << out_path << "\n";
    };
  });

  // ---- pipeline
  std::string export_dir;
  auto* pipe = app.add_subcommand("pipeline", "All stages plus 10-fold cross-validation, with caching");
  ConfigFlags pipe_cfg;
  pipe->add_option("--manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  pipe->add_option("--out", out_path, "Report directory")->required();
  pipe->add_option("--export-vectors", export_dir, "Also write <video_id>.fdm temporal vectors here");
  pipe_cfg.attach(pipe, true);
  pipe->callback([&] {
    action = [&] {
      const Manifest m = parse_manifest(manifest_path);
      const PipelineConfig cfg = pipe_cfg.build();
      const auto start = std::chrono::steady_clock::now();
      RunStats stats;
      auto samples = compute_feature_vectors(m, cfg, jobs, &stats);
      if (!export_dir.empty()) {
        for (const auto& s : samples)
          write_feature_matrix(FeatureMatrix(1, s.features.size(), s.features, cfg.descriptor),
                               fs::path(export_dir) / (s.video_id + ".fdm"));
      }
      EvalReport r = cross_validate(samples, cfg.svm, jobs);
      r.config = config_to_json(cfg);
      r.descriptor = cfg.descriptor;
      r.normalization = cfg.normalization;
      r.evm = cfg.use_evm;
      write_reports(r, out_path);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      char timing[64];
      std::snprintf(timing, sizeof timing, "%.2f s", secs);
      out << stats.videos << " videos, " << stats.stages_computed << " stage outputs computed, " << stats.stages_cached
          << " cached, " << timing << "\n"
          << "posed " << percent(r.aggregate.posed_accuracy()) << ", spontaneous "
          << percent(r.aggregate.spontaneous_accuracy()) << ", overall " << percent(r.aggregate.overall_accuracy())
          << " -> " << out_path << "\n";
    };
  });

  // ---- grid
  std::vector<std::string> grid_descriptors{"lpq", "hog"};
  auto* grid = app.add_subcommand("grid", "Cross-validate every descriptor x normalization x EVM combination");
  ConfigFlags grid_cfg;
  grid->add_option("--manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  grid->add_option("--out", out_path, "Report directory")->required();
  grid->add_option("--descriptors", grid_descriptors, "Descriptors to include")->delimiter(',')->capture_default_str();
  grid_cfg.attach(grid, true);
  grid->callback([&] {
    action = [&] {
      const Manifest m = parse_manifest(manifest_path);
      const PipelineConfig base = grid_cfg.build();
      std::vector<EvalReport> reports;
      for (const auto& d : grid_descriptors)
        for (auto nm : {NormalizationMode::EyeLocation, NormalizationMode::FaceOrientation,
                        NormalizationMode::NoNormalization})
          for (bool evm : {true, false}) {
            PipelineConfig cfg = base;
            cfg.descriptor = parse_descriptor_kind(d);
            cfg.normalization = nm;
            cfg.use_evm = evm;
            EvalReport r = run_cross_validation(m, cfg, jobs);
            const std::string cell = std::string(to_string(cfg.descriptor)) + "_" +
                                     std::string(to_string(nm)) + (evm ? "_evm" : "_noevm");
            emit_report(r, fs::path(out_path) / (cell + ".csv"), ReportFormat::Csv);
            out << cell << ": overall " << percent(r.aggregate.overall_accuracy()) << "\n";
            reports.push_back(std::move(r));
          }
      emit_grid(reports, fs::path(out_path) / "grid.md");
    };
  });

  // ---- make-folds
  unsigned seed = 1;
  auto* folds = app.add_subcommand("make-folds", "Assign stratified random folds 1..10");
  folds->add_option("--manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  folds->add_option("--out", out_path, "Output manifest")->required();
  folds->add_option("--seed", seed, "Shuffle seed")->capture_default_str();
  folds->callback([&] {
    action = [&] {
      Manifest m = parse_manifest(manifest_path);
      assign_stratified_folds(m, seed);
      write_manifest(m, out_path);
      out << "assigned folds to " << m.records.size() << " records -> " << out_path << "\n";
    };
  });

  // ---- synth
  SynthParams sp;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic posed/spontaneous smile dataset");
  synth->add_option("--out", out_path, "Dataset directory")->required();
  synth->add_option("--videos", sp.videos, "Number of videos")->capture_default_str();
  synth->add_option("--seed", sp.seed, "Generator seed")->capture_default_str();
  synth->add_option("--min-frames", sp.min_frames, "Shortest video")->capture_default_str();
  synth->add_option("--max-frames", sp.max_frames, "Longest video")->capture_default_str();
  synth->callback([&] {
    action = [&] {
      const Manifest m = generate_synthetic_dataset(out_path, sp);
      PipelineConfig cfg;
      cfg.descriptor = DescriptorKind::HOG;
      cfg.layout_scale = kSynthInterocular / CanonicalLayout{}.interocular;
      write_file_atomic(fs::path(out_path) / "config.json", config_to_json(cfg) + "\n");
      out << "wrote " << m.records.size() << " videos, manifest.json and config.json -> " << out_path << "\n";
    };
  });

  for (auto* sub : app.get_subcommands({})) sub->parse_complete_callback([&stage, sub] { stage = sub->get_name(); });

  std::vector<const char*> argv{"facedyn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return kExitOk;
    err << "usage error: " << e.what() << "\n" << "run `facedyn --help` for usage\n";
    return kExitUsage;
  }
  if (!action) {
    err << "usage error: no subcommand given\n";
    return kExitUsage;
  }
  try {
    action();
  } catch (const StageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << stage << ": " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace facedyn
