#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "facedyn/core.hpp"

namespace facedyn {

// Rows are samples.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TrainConfig {
  double C = 1.0;
  double tol = 1e-3;     // stop once the largest projected-gradient magnitude is below this
  int max_iter = 10000;  // full passes over the data
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> std;                  // population std; 1 where the column is constant
  std::vector<std::uint8_t> zero_variance;  // 1 where the column is constant
};

// Requires at least two rows.
Standardization standardize_fit(const SampleMatrix& x);
SampleMatrix standardize_apply(const SampleMatrix& x, const Standardization& s);

struct LinearSvmModel {
  std::vector<double> w;
  double b = 0.0;
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::uint8_t> zero_variance;
  TrainConfig config;

  std::size_t dimension() const { return w.size(); }
  friend bool operator==(const LinearSvmModel&, const LinearSvmModel&) = default;
};

struct TrainDiagnostics {
  int passes = 0;
  bool converged = false;
  double max_violation = 0.0;
  // Dual objective 1/2 a'Qa - sum(a) after each pass; never increases.
  std::vector<double> dual_objective;
  double primal_objective = 0.0;  // at the returned solution
};

// +1 for Posed, -1 for Spontaneous.
int label_sign(SmileLabel label);

// L2-regularized hinge-loss SVM on `x` as given (identity standardization).
// The bias is learned as the weight of an appended constant-1 feature.
LinearSvmModel svm_train(const SampleMatrix& x, std::span<const int> y, const TrainConfig& cfg = {},
                         TrainDiagnostics* diagnostics = nullptr);
// Fits a standardization on `x`, trains on the standardized rows and stores it in the model.
LinearSvmModel svm_train_standardized(const SampleMatrix& x, std::span<const int> y, const TrainConfig& cfg = {},
                                      TrainDiagnostics* diagnostics = nullptr);

struct Prediction {
  SmileLabel label;
  double score;
};

// score = w . ((x - mean) / std) + b; score >= 0 is Posed.
Prediction svm_predict(const LinearSvmModel& model, std::span<const double> x);

// Equivalent model acting on raw features: mean 0, std 1.
LinearSvmModel fold_standardization(const LinearSvmModel& model);

std::string model_to_json(const LinearSvmModel& model);
LinearSvmModel model_from_json(const std::string& text);  // throws FormatError
void save_model(const LinearSvmModel& model, const std::filesystem::path& path);
LinearSvmModel load_model(const std::filesystem::path& path);

}  // namespace facedyn
