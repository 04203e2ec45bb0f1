// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if all pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "facedyn/classify.hpp"
#include "facedyn/eval.hpp"
#include "facedyn/features.hpp"
#include "facedyn/image_io.hpp"
#include "facedyn/imgproc.hpp"
#include "facedyn/magnify.hpp"
#include "facedyn/pipeline.hpp"
#include "facedyn/synth.hpp"
#include "facedyn/temporal.hpp"
#include "facedyn/tracking.hpp"
#include "fixtures.hpp"
#include "reference_tables.hpp"

using namespace facedyn;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------- 1

Outcome table_consistency() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& r : fixtures::kReferenceAccuracies)
    worst = std::max(worst, std::abs(weighted_overall(r.posed, r.spontaneous, fixtures::kPosedCount,
                                                      fixtures::kSpontaneousCount) -
                                     r.overall));
  const double secs = seconds_since(t0);
  o.require(worst <= 0.1, "max deviation " + fmt("%.4f", worst));
  o.require(secs < 1.0, "runtime " + fmt("%.3f s", secs));
  o.note(std::to_string(std::size(fixtures::kReferenceAccuracies)) + " pairs, max deviation " + fmt("%.4f", worst));
  return o;
}

// ---------------------------------------------------------------- 2

Frame patch_frame(int w, int h, double px, double py, double size, const fixtures::SmoothTexture& tex) {
  return fixtures::render(w, h, [&](double x, double y) {
    if (x >= px && x < px + size && y >= py && y < py + size) return tex(x - px, y - py);
    return 0.5;
  });
}

Outcome tracking() {
  Outcome o;
  const auto t0 = Clock::now();
  fixtures::SmoothTexture tex(17);
  std::vector<Frame> frames;
  for (int t = 0; t < 20; ++t) frames.push_back(patch_frame(160, 128, 30 + t, 32, 64, tex));
  const BoundingBox face{30, 32, 64, 64};
  const auto track = track_sequence(VideoSequence(std::move(frames), 50.0), face, {40, 45, 15, 10}, {70, 45, 15, 10});
  double err = 0.0;
  for (std::size_t c = 0; c < 4; ++c)
    err = std::max(err, distance(track.frames.back().face_corners[c], face.corners()[c] + Point2{19.0, 0.0}));
  o.require(err < 0.5, "translation box error " + fmt("%.3f px", err));

  fixtures::SmoothTexture tex2(23);
  const Frame a = patch_frame(128, 128, 30, 30, 64, tex2);
  const Frame b = patch_frame(128, 128, 33.0, 31.0, 64, tex2);
  const BoundingBox face2{30, 30, 64, 64};
  const auto pal = track_sequence(VideoSequence({a, b, a}, 50.0), face2, {40, 45, 15, 10}, {70, 45, 15, 10});
  double back = 0.0;
  for (std::size_t c = 0; c < 4; ++c) back = std::max(back, distance(pal.frames.back().face_corners[c], face2.corners()[c]));
  o.require(back < 0.5, "palindrome error " + fmt("%.3f px", back));
  const double secs = seconds_since(t0);
  o.require(secs < 10.0, "runtime " + fmt("%.2f s", secs));
  o.note("final box error " + fmt("%.3f px", err) + ", palindrome " + fmt("%.3f px", back) + ", " + fmt("%.2f s", secs));
  return o;
}

// ---------------------------------------------------------------- 3

Outcome flow() {
  Outcome o;
  fixtures::SmoothTexture tex(6);
  const Frame prev = fixtures::render(128, 112, tex);
  const Frame next = fixtures::render(128, 112, [&](double x, double y) { return tex(x - 2.0, y - 1.0); });
  const auto f = farneback_flow(prev, next);
  double err = 0.0;
  int n = 0;
  for (int y = 16; y < f.height - 16; ++y)
    for (int x = 16; x < f.width - 16; ++x, ++n) err += std::hypot(f.dx(x, y) - 2.0, f.dy(x, y) - 1.0);
  err /= n;
  o.require(err < 0.25, "interior mean error " + fmt("%.4f px", err));

  const auto same = farneback_flow(prev, prev);
  double mag = 0.0;
  for (int y = 0; y < same.height; ++y)
    for (int x = 0; x < same.width; ++x) mag += std::hypot(same.dx(x, y), same.dy(x, y));
  mag /= same.width * same.height;
  o.require(mag < 1e-3, "flow(A,A) magnitude " + fmt("%.2e", mag));
  o.note("translation error " + fmt("%.2e px", err) + ", flow(A,A) " + fmt("%.1e", mag));
  return o;
}

// ---------------------------------------------------------------- 4

VideoSequence oscillating_blob(int frames, double amplitude_px, double freq, double fps) {
  std::vector<Frame> out;
  for (int t = 0; t < frames; ++t) {
    const double cx = 32.0 + amplitude_px * std::sin(2 * kPi * freq * t / fps);
    out.push_back(fixtures::render(64, 64, [&](double x, double y) {
      return fixtures::gaussian_blob(x, y, cx, 32.0, 6.0, 0.3, 0.4);
    }));
  }
  return VideoSequence(std::move(out), fps);
}

double centroid_amplitude(const VideoSequence& v, double freq) {
  const int n = static_cast<int>(v.size());
  double s = 0, c = 0;
  for (int t = 0; t < n; ++t) {
    double m0 = 0, m1 = 0;
    for (int y = 0; y < v[t].height(); ++y)
      for (int x = 0; x < v[t].width(); ++x) {
        const double w = v[t](x, y) - 0.4;
        m0 += w;
        m1 += w * x;
      }
    const double cx = m1 / m0;
    s += cx * std::sin(2 * kPi * freq * t / v.fps());
    c += cx * std::cos(2 * kPi * freq * t / v.fps());
  }
  return 2.0 / n * std::hypot(s, c);
}

Outcome evm() {
  Outcome o;
  const auto v = oscillating_blob(100, 0.2, 1.0, 50.0);
  MagnifyParams p;
  p.alpha = 10.0;
  const double amp = centroid_amplitude(magnify_sequence(v, p), 1.0);
  o.require(std::abs(amp - 11.0 * 0.2) < 0.25 * 11.0 * 0.2, "amplified amplitude " + fmt("%.3f px", amp));

  p.alpha = 0.0;
  double ident = 0.0;
  const auto zero = magnify_sequence(v, p);
  for (std::size_t t = 0; t < v.size(); ++t)
    ident = std::max(ident, fixtures::interior_max_abs_diff(zero[t].plane(), v[t].plane(), 0));
  const Frame still_frame = fixtures::render(64, 64, fixtures::SmoothTexture(2));
  const auto still = magnify_sequence(VideoSequence(std::vector<Frame>(20, still_frame), 50.0), MagnifyParams{});
  for (const auto& f : still) ident = std::max(ident, fixtures::interior_max_abs_diff(f.plane(), still_frame.plane(), 0));
  o.require(ident < 1e-4, "identity deviation " + fmt("%.2e", ident));

  const auto fast = oscillating_blob(100, 0.2, 10.0, 50.0);
  const double in10 = centroid_amplitude(fast, 10.0), out10 = centroid_amplitude(magnify_sequence(fast, MagnifyParams{}), 10.0);
  const double rel = std::abs(out10 - in10) / in10;
  o.require(rel < 0.1, "out-of-band change " + fmt("%.1f%%", 100 * rel));
  o.note("1 Hz amplitude " + fmt("%.3f px", amp) + " (target 2.2), identity " + fmt("%.1e", ident) +
         ", 10 Hz change " + fmt("%.2f%%", 100 * rel));
  return o;
}

// ---------------------------------------------------------------- 5

Frame noise_texture(int w, int h, std::uint32_t seed, double blur_sigma) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Plane p(w, h);
  for (float& v : p.data()) v = u(rng);
  if (blur_sigma > 0) p = imgproc::gaussian_blur(p, 2 * static_cast<int>(std::ceil(3 * blur_sigma)) + 1, blur_sigma);
  return Frame::clamp_from(std::move(p));
}

double chi2(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] + b[i] > 0) d += (a[i] - b[i]) * (a[i] - b[i]) / (a[i] + b[i]);
  return d;
}

Outcome lpq() {
  Outcome o;
  const auto one_hot = lpq_descriptor(fixtures::constant_frame(40, 30, 0.42f));
  o.require(one_hot[255] == 1.0 && std::accumulate(one_hot.begin(), one_hot.end(), 0.0) == 1.0, "constant image not one-hot at 255");
  double worst_sum = 0.0;
  for (std::uint32_t seed : {1u, 2u, 3u}) {
    const auto h = lpq_descriptor(noise_texture(50, 41, seed, 1.0));
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(h.begin(), h.end(), 0.0) - 1.0));
  }
  o.require(worst_sum < 1e-9, "histogram sum off by " + fmt("%.2e", worst_sum));
  const Frame tex = noise_texture(128, 128, 11, 1.5);
  const Frame blurred = Frame::clamp_from(imgproc::gaussian_blur(tex.plane(), 7, 1.0));
  const Frame other = fixtures::render(128, 128, [](double x, double y) {
    return 0.5 + 0.3 * std::sin(0.9 * x + 0.15 * y) + 0.1 * std::sin(0.05 * x * y / 16.0);
  });
  const auto h = lpq_descriptor(tex);
  const double ratio = chi2(h, lpq_descriptor(blurred)) / chi2(h, lpq_descriptor(other));
  o.require(ratio < 0.5, "blur chi2 ratio " + fmt("%.3f", ratio));
  o.note("sum error " + fmt("%.1e", worst_sum) + ", blur/other chi2 ratio " + fmt("%.3f", ratio));
  return o;
}

// ---------------------------------------------------------------- 6

Outcome hog() {
  Outcome o;
  const auto d = hog_descriptor(fixtures::render(64, 64, fixtures::SmoothTexture(1)));
  o.require(d.size() == 7936 && hog_dimension(64, 64) == 7936, "dimension " + std::to_string(d.size()));
  const auto flat = hog_descriptor(fixtures::constant_frame(64, 64, 0.7f));
  o.require(std::all_of(flat.begin(), flat.end(), [](double v) { return v == 0.0; }), "constant image not all zero");
  const auto edge = hog_descriptor(fixtures::render(64, 64, [](double x, double) { return x < 32 ? 0.2 : 0.8; }));
  double worst = 1.0;
  for (int cy = 0; cy < 16; ++cy)
    for (int cx : {7, 8}) {
      const double* cell = &edge[(static_cast<std::size_t>(cy) * 16 + cx) * 31];
      double total = 0.0;
      for (int k = 0; k < 9; ++k) total += cell[18 + k];
      worst = std::min(worst, total > 0 ? cell[18] / total : 0.0);
    }
  o.require(worst > 0.8, "step-edge concentration " + fmt("%.3f", worst));
  o.note("7936 values, step-edge concentration " + fmt("%.1f%%", 100 * worst));
  return o;
}

// ---------------------------------------------------------------- 7

std::vector<double> dct_oracle(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t t = 0; t < n; ++t) c[k] += x[t] * std::cos(kPi * (2.0 * t + 1.0) * k / (2.0 * n));
    c[k] *= std::sqrt((k == 0 ? 1.0 : 2.0) / n);
  }
  return c;
}

Outcome temporal() {
  Outcome o;
  std::mt19937 rng(9);
  std::normal_distribution<double> g;
  double energy = 0.0;
  for (std::size_t n : {16u, 101u}) {
    std::vector<double> x(n);
    for (double& v : x) v = g(rng);
    const auto c = dct_time(x);
    double ex = 0, ec = 0;
    for (std::size_t k = 0; k < n; ++k) {
      ex += x[k] * x[k];
      ec += c[k] * c[k];
    }
    energy = std::max(energy, std::abs(ex - ec));
  }
  o.require(energy < 1e-9, "energy difference " + fmt("%.2e", energy));

  const auto c = dct_time(std::vector<double>(100, 3.0));
  double leak = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) leak = std::max(leak, std::abs(c[k]));
  o.require(std::abs(c[0] - 30.0) < 1e-9 && leak < 1e-9, "constant series leaks " + fmt("%.2e", leak));

  double pad_err = 0.0, crop_err = 0.0;
  for (std::size_t t_len : {80u, 500u}) {
    FeatureMatrix m(t_len, 3);
    for (double& v : m.data()) v = g(rng);
    const auto out = normalize_length(m, {100});
    for (std::size_t col = 0; col < 3; ++col) {
      std::vector<double> series;
      for (std::size_t r = 0; r < t_len; ++r) series.push_back(m(r, col));
      const auto full = dct_oracle(series);
      for (std::size_t r = 0; r < 100; ++r) {
        const double want = r < t_len ? full[r] : 0.0;
        (t_len == 80 ? pad_err : crop_err) = std::max(t_len == 80 ? pad_err : crop_err, std::abs(out(r, col) - want));
      }
    }
  }
  o.require(pad_err < 1e-9, "pad error " + fmt("%.2e", pad_err));
  o.require(crop_err < 1e-9, "crop error " + fmt("%.2e", crop_err));
  o.note("energy " + fmt("%.1e", energy) + ", pad " + fmt("%.1e", pad_err) + ", crop " + fmt("%.1e", crop_err));
  return o;
}

// ---------------------------------------------------------------- 8

SampleMatrix blobs(int n, int d, double shift, double noise, std::uint32_t seed, std::vector<int>& y) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, noise);
  SampleMatrix x(n, d);
  y.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2 == 0 ? 1 : -1;
    for (int j = 0; j < d; ++j) x(i, j) = g(rng) + (j == 0 ? shift * y[i] : 0.0) + 3.0 * j;
  }
  return x;
}

Outcome svm() {
  Outcome o;
  std::vector<int> y;
  const SampleMatrix x = blobs(60, 6, 0.6, 1.0, 4, y);
  TrainDiagnostics diag;
  svm_train_standardized(x, y, {}, &diag);
  bool monotone = diag.dual_objective.size() >= 2;
  for (std::size_t i = 1; i < diag.dual_objective.size(); ++i)
    monotone = monotone &&
               diag.dual_objective[i] <= diag.dual_objective[i - 1] + 1e-12 * std::abs(diag.dual_objective[i - 1]);
  o.require(monotone, "dual objective increased");

  SampleMatrix four(4, 2);
  four << 1, 0.1, 1, -0.1, -1, 0.1, -1, -0.1;
  TrainConfig tight;
  tight.tol = 1e-9;
  const auto m = svm_train(four, std::vector<int>{1, 1, -1, -1}, tight);
  const double closed = std::max({std::abs(m.w[0] - 1.0), std::abs(m.w[1]), std::abs(m.b)});
  o.require(closed < TrainConfig{}.tol, "closed-form deviation " + fmt("%.2e", closed));

  std::vector<int> ys;
  const SampleMatrix xs = blobs(30, 4, 4.0, 0.5, 7, ys);
  SampleMatrix doubled(60, 4);
  std::vector<int> y2;
  for (int i = 0; i < 30; ++i) {
    doubled.row(2 * i) = xs.row(i);
    doubled.row(2 * i + 1) = xs.row(i);
    y2.push_back(ys[i]);
    y2.push_back(ys[i]);
  }
  TrainConfig cfg;
  cfg.tol = 1e-10;
  const auto a = svm_train(xs, ys, cfg), b = svm_train(doubled, y2, cfg);
  double dup = std::abs(a.b - b.b);
  for (std::size_t j = 0; j < a.w.size(); ++j) dup = std::max(dup, std::abs(a.w[j] - b.w[j]));
  o.require(dup < 1e-6, "duplicate deviation " + fmt("%.2e", dup));
  o.note(std::to_string(diag.dual_objective.size()) + " monotone passes, closed form " + fmt("%.1e", closed) +
         ", duplicates " + fmt("%.1e", dup));
  return o;
}

// ---------------------------------------------------------------- 9, 10

struct Benchmark {
  Outcome accuracy, determinism;
};

Benchmark benchmark(const fs::path& work) {
  Benchmark b;
  fs::remove_all(work);
  const int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto t0 = Clock::now();
  const Manifest m = generate_synthetic_dataset(work / "data", SynthParams{});
  PipelineConfig cfg;
  cfg.descriptor = DescriptorKind::HOG;
  cfg.layout_scale = kSynthInterocular / CanonicalLayout{}.interocular;
  cfg.cache_dir = work / "cache_a";
  const EvalReport first = run_cross_validation(m, cfg, jobs);
  const double secs = seconds_since(t0);
  write_reports(first, work / "run_a");

  const double acc = first.aggregate.overall_accuracy();
  b.accuracy.require(acc >= 90.0, "overall accuracy " + fmt("%.2f%%", acc));
  b.accuracy.require(secs < 600.0, "runtime " + fmt("%.1f s", secs));
  b.accuracy.note(std::to_string(m.records.size()) + " videos, HOG, overall " + fmt("%.2f%%", acc) + " (posed " +
                  fmt("%.2f%%", first.aggregate.posed_accuracy()) + ", spontaneous " +
                  fmt("%.2f%%", first.aggregate.spontaneous_accuracy()) + "), generate + run " + fmt("%.1f s", secs));

  // Second run from an empty cache with a different worker count.
  cfg.cache_dir = work / "cache_b";
  write_reports(run_cross_validation(m, cfg, jobs == 1 ? 2 : 1), work / "run_b");
  const bool same = read_file(work / "run_a" / "report.csv") == read_file(work / "run_b" / "report.csv");
  b.determinism.require(same, "report.csv differs between runs");
  b.determinism.note(same ? "report.csv byte-identical across two uncached runs" : "");
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "facedyn_acceptance";
  std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"table consistency", table_consistency},
      {"tracking", tracking},
      {"optical flow", flow},
      {"Eulerian magnification", evm},
      {"LPQ", lpq},
      {"HOG", hog},
      {"temporal DCT", temporal},
      {"linear SVM", svm},
  };
  int failures = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::printf("%s %2d %-24s %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      Outcome o;
      o.require(false, std::string("exception: ") + e.what());
      return o;
    }
  };
  for (std::size_t i = 0; i < checks.size(); ++i)
    report(static_cast<int>(i + 1), checks[i].first, guarded(checks[i].second));

  Benchmark b;
  try {
    b = benchmark(work);
  } catch (const std::exception& e) {
    b.accuracy.require(false, std::string("exception: ") + e.what());
    b.determinism.require(false, "benchmark did not complete");
  }
  report(9, "synthetic benchmark", b.accuracy);
  report(10, "determinism", b.determinism);
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
