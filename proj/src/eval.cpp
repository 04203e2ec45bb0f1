#include "facedyn/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "facedyn/image_io.hpp"

namespace facedyn {

void ConfusionMatrix::add(SmileLabel truth, SmileLabel predicted) {
  if (truth == SmileLabel::Posed) {
    (predicted == SmileLabel::Posed ? tp : fn) += 1;
  } else {
    (predicted == SmileLabel::Spontaneous ? tn : fp) += 1;
  }
}

namespace {

double percent(long num, long den) {
  return den == 0 ? std::numeric_limits<double>::quiet_NaN() : 100.0 * static_cast<double>(num) / den;
}

std::string fixed4(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string fixed2(double v) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

double ConfusionMatrix::posed_accuracy() const { return percent(tp, posed_total()); }
double ConfusionMatrix::spontaneous_accuracy() const { return percent(tn, spontaneous_total()); }
double ConfusionMatrix::overall_accuracy() const { return percent(tp + tn, total()); }

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fn += o.fn;
  tn += o.tn;
  fp += o.fp;
  return *this;
}

double weighted_overall(double posed_acc, double spont_acc, double n_posed, double n_spont) {
  if (!(n_posed >= 0.0) || !(n_spont >= 0.0) || n_posed + n_spont <= 0.0)
    throw DimensionError("weighted_overall needs a positive sample count");
  for (double a : {posed_acc, spont_acc})
    if (!(a >= 0.0 && a <= 100.0)) throw DimensionError("accuracies must lie in [0, 100]");
  return (posed_acc * n_posed + spont_acc * n_spont) / (n_posed + n_spont);
}

LinearSvmModel train_excluding_fold(const std::vector<LabeledSample>& samples, int fold, const TrainConfig& cfg) {
  std::vector<const LabeledSample*> train;
  for (const auto& s : samples)
    if (s.fold != fold) train.push_back(&s);
  if (train.empty()) throw TrainingError("no training samples outside fold " + std::to_string(fold));
  const auto d = static_cast<Eigen::Index>(train.front()->features.size());
  SampleMatrix x(static_cast<Eigen::Index>(train.size()), d);
  std::vector<int> y;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (static_cast<Eigen::Index>(train[i]->features.size()) != d)
      throw DimensionError(train[i]->video_id + ": feature vector has " +
                           std::to_string(train[i]->features.size()) + " values, expected " + std::to_string(d));
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(train[i]->features.data(), d);
    y.push_back(label_sign(train[i]->label));
  }
  return svm_train_standardized(x, y, cfg);
}

ConfusionMatrix evaluate_fold(const LinearSvmModel& model, const std::vector<LabeledSample>& samples, int fold) {
  ConfusionMatrix cm;
  for (const auto& s : samples)
    if (s.fold == fold) cm.add(s.label, svm_predict(model, s.features).label);
  return cm;
}

EvalReport cross_validate(const std::vector<LabeledSample>& samples, const TrainConfig& cfg, int jobs) {
  cfg.validate();
  if (samples.empty()) throw DimensionError("cross-validation needs samples");
  const std::size_t d = samples.front().features.size();
  std::vector<int> per_fold(kFoldCount + 1, 0);
  for (const auto& s : samples) {
    if (s.features.size() != d) {
      throw DimensionError(s.video_id + ": feature vector has " + std::to_string(s.features.size()) +
                           " values, expected " + std::to_string(d));
    }
    if (s.fold < 1 || s.fold > kFoldCount) throw ManifestError(s.video_id + ": fold must be in 1..10");
    ++per_fold[s.fold];
  }
  for (int k = 1; k <= kFoldCount; ++k)
    if (per_fold[k] == 0) throw ManifestError("fold " + std::to_string(k) + " has no videos");

  EvalReport report;
  report.folds.resize(kFoldCount);
  std::atomic<int> next{1};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int k = next++; k <= kFoldCount; k = next++) {
      try {
        report.folds[k - 1] = evaluate_fold(train_excluding_fold(samples, k, cfg), samples, k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, kFoldCount);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (const auto& cm : report.folds) report.aggregate += cm;
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::string out = "fold,tp,fn,tn,fp,posed_acc,spont_acc,overall_acc\n";
  auto row = [&](const std::string& name, const ConfusionMatrix& cm) {
    out += name + "," + std::to_string(cm.tp) + "," + std::to_string(cm.fn) + "," + std::to_string(cm.tn) + "," +
           std::to_string(cm.fp) + "," + fixed4(cm.posed_accuracy()) + "," + fixed4(cm.spontaneous_accuracy()) + "," +
           fixed4(cm.overall_accuracy()) + "\n";
  };
  for (std::size_t k = 0; k < report.folds.size(); ++k) row(std::to_string(k + 1), report.folds[k]);
  row("all", report.aggregate);
  return out;
}

std::string report_markdown(const std::vector<EvalReport>& reports) {
  static constexpr NormalizationMode kModes[3] = {NormalizationMode::EyeLocation, NormalizationMode::FaceOrientation,
                                                  NormalizationMode::NoNormalization};
  static constexpr DescriptorKind kKinds[4] = {DescriptorKind::LPQ, DescriptorKind::HOG, DescriptorKind::FLOW,
                                               DescriptorKind::EXTERNAL};
  auto find = [&](DescriptorKind kind, NormalizationMode mode, bool evm) -> const EvalReport* {
    const EvalReport* hit = nullptr;
    for (const auto& r : reports)
      if (r.descriptor == kind && r.normalization == mode && r.evm == evm) hit = &r;
    return hit;
  };
  auto table = [&](const std::string& title, auto&& cell_text) {
    std::string out = "### " + title + "\n\n| descriptor |";
    std::string rule = "|---|";
    for (auto mode : kModes)
      for (bool evm : {true, false}) {
        out += " " + std::string(to_string(mode)) + (evm ? " + EVM" : "") + " |";
        rule += "---|";
      }
    out += "\n" + rule + "\n";
    for (auto kind : kKinds) {
      if (std::none_of(reports.begin(), reports.end(), [&](const EvalReport& r) { return r.descriptor == kind; }))
        continue;
      out += "| " + std::string(to_string(kind)) + " |";
      for (auto mode : kModes)
        for (bool evm : {true, false}) {
          const EvalReport* r = find(kind, mode, evm);
          out += " " + (r ? cell_text(r->aggregate) : std::string("-")) + " |";
        }
      out += "\n";
    }
    return out;
  };
  return table("Accuracy (%), posed / spontaneous",
               [](const ConfusionMatrix& a) {
                 return fixed2(a.posed_accuracy()) + " / " + fixed2(a.spontaneous_accuracy());
               }) +
         "\n" + table("Overall accuracy (%)", [](const ConfusionMatrix& a) { return fixed2(a.overall_accuracy()); });
}

void emit_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format) {
  write_file_atomic(path, format == ReportFormat::Csv ? report_csv(report) : report_markdown({report}));
}

void emit_grid(const std::vector<EvalReport>& reports, const std::filesystem::path& path) {
  write_file_atomic(path, report_markdown(reports));
}

}  // namespace facedyn
