#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "facedyn/classify.hpp"
#include "facedyn/features.hpp"
#include "facedyn/manifest.hpp"
#include "facedyn/normalize.hpp"

namespace facedyn {

// Posed is the positive class.
struct ConfusionMatrix {
  long tp = 0;  // posed predicted posed
  long fn = 0;  // posed predicted spontaneous
  long tn = 0;  // spontaneous predicted spontaneous
  long fp = 0;  // spontaneous predicted posed

  void add(SmileLabel truth, SmileLabel predicted);
  long posed_total() const { return tp + fn; }
  long spontaneous_total() const { return tn + fp; }
  long total() const { return tp + fn + tn + fp; }
  // Percentages; NaN when the denominator is zero.
  double posed_accuracy() const;
  double spontaneous_accuracy() const;
  double overall_accuracy() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct EvalReport {
  std::vector<ConfusionMatrix> folds;  // folds[k - 1] is fold k
  ConfusionMatrix aggregate;           // element-wise sum of folds
  std::string config;                  // pipeline configuration echo (JSON text)
  // Grid coordinates used by the markdown layout.
  DescriptorKind descriptor = DescriptorKind::LPQ;
  NormalizationMode normalization = NormalizationMode::EyeLocation;
  bool evm = false;
};

struct LabeledSample {
  std::string video_id;
  SmileLabel label = SmileLabel::Posed;
  int fold = 1;
  std::vector<double> features;
};

// Standardization + SVM fit on every sample whose fold differs from `fold`,
// in input order.
LinearSvmModel train_excluding_fold(const std::vector<LabeledSample>& samples, int fold, const TrainConfig& cfg = {});
// Confusion matrix of `model` on the samples of `fold`.
ConfusionMatrix evaluate_fold(const LinearSvmModel& model, const std::vector<LabeledSample>& samples, int fold);

// For k = 1..10: standardize and train on folds != k, test on fold k.
// Every fold must be non-empty. Folds run on up to `jobs` threads; the
// result does not depend on `jobs`.
EvalReport cross_validate(const std::vector<LabeledSample>& samples, const TrainConfig& cfg = {}, int jobs = 1);

// (posed_acc * n_posed + spont_acc * n_spont) / (n_posed + n_spont).
double weighted_overall(double posed_acc, double spont_acc, double n_posed, double n_spont);

// fold,tp,fn,tn,fp,posed_acc,spont_acc,overall_acc; one row per fold then "all".
std::string report_csv(const EvalReport& report);

// Two tables with rows = descriptors and columns = normalization x EVM:
// "posed / spontaneous" accuracy pairs, then overall accuracy. Empty cells
// show "-". A later report for the same cell replaces an earlier one.
std::string report_markdown(const std::vector<EvalReport>& reports);

enum class ReportFormat { Csv, Markdown };
void emit_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format);
void emit_grid(const std::vector<EvalReport>& reports, const std::filesystem::path& path);

}  // namespace facedyn
