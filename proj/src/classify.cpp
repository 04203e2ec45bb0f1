#include "facedyn/classify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "facedyn/image_io.hpp"
#include "json.hpp"

namespace facedyn {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("SVM C must be positive");
  if (!(tol > 0.0)) throw ConfigError("SVM tol must be positive");
  if (max_iter < 1) throw ConfigError("SVM max_iter must be >= 1");
}

Standardization standardize_fit(const SampleMatrix& x) {
  if (x.rows() < 2) throw DimensionError("standardization needs at least 2 samples");
  const auto d = static_cast<std::size_t>(x.cols());
  Standardization s{std::vector<double>(d), std::vector<double>(d), std::vector<std::uint8_t>(d, 0)};
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).sum() / n;
    const double var = (x.col(c).array() - mean).square().sum() / n;
    s.mean[c] = mean;
    if (var > 0.0) {
      s.std[c] = std::sqrt(var);
    } else {
      s.std[c] = 1.0;
      s.zero_variance[c] = 1;
    }
  }
  return s;
}

SampleMatrix standardize_apply(const SampleMatrix& x, const Standardization& s) {
  if (static_cast<std::size_t>(x.cols()) != s.mean.size()) throw DimensionError("standardization dimension mismatch");
  const Eigen::Map<const Eigen::RowVectorXd> mean(s.mean.data(), x.cols());
  const Eigen::Map<const Eigen::RowVectorXd> sd(s.std.data(), x.cols());
  SampleMatrix out = x;
  out.rowwise() -= mean;
  out.array().rowwise() /= sd.array();
  return out;
}

int label_sign(SmileLabel label) { return label == SmileLabel::Posed ? 1 : -1; }

namespace {

void check_training_data(const SampleMatrix& x, std::span<const int> y) {
  if (x.rows() < 2) throw TrainingError("SVM training needs at least 2 samples");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw DimensionError(std::to_string(x.rows()) + " samples but " + std::to_string(y.size()) + " labels");
  }
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == -1) neg = true;
    else throw TrainingError("labels must be +1 or -1");
  }
  if (!pos || !neg) throw TrainingError("SVM training needs both classes");
  if (!x.allFinite()) throw TrainingError("training features contain non-finite values");
}

}  // namespace

// Dual coordinate descent on the Gram matrix of the bias-augmented samples:
// min_a 1/2 a'Qa - sum(a), 0 <= a <= C, Q_ij = y_i y_j (x_i . x_j + 1).
LinearSvmModel svm_train(const SampleMatrix& x, std::span<const int> y, const TrainConfig& cfg,
                         TrainDiagnostics* diagnostics) {
  cfg.validate();
  check_training_data(x, y);
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd q = x * x.transpose();
  q.array() += 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) q(i, j) *= y[i] * y[j];

  // Visiting order: a fresh permutation each pass from a fixed-seed generator,
  // so runs are reproducible across platforms.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937 rng(0x5eed);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad_base = Eigen::VectorXd::Zero(n);  // Q a
  TrainDiagnostics diag;
  for (diag.passes = 0; diag.passes < cfg.max_iter;) {
    double max_pg = 0.0;
    for (Eigen::Index k = n - 1; k > 0; --k) std::swap(order[k], order[rng() % static_cast<std::uint32_t>(k + 1)]);
    for (const Eigen::Index i : order) {
      const double g = grad_base(i) - 1.0;
      double pg = g;
      if (alpha(i) <= 0.0) pg = std::min(g, 0.0);
      else if (alpha(i) >= cfg.C) pg = std::max(g, 0.0);
      max_pg = std::max(max_pg, std::abs(pg));
      if (pg == 0.0) continue;
      const double updated = std::clamp(alpha(i) - g / q(i, i), 0.0, cfg.C);
      const double delta = updated - alpha(i);
      if (delta == 0.0) continue;
      alpha(i) = updated;
      grad_base += delta * q.col(i);
    }
    ++diag.passes;
    diag.dual_objective.push_back(0.5 * alpha.dot(grad_base) - alpha.sum());
    diag.max_violation = max_pg;
    if (max_pg < cfg.tol) {
      diag.converged = true;
      break;
    }
  }

  Eigen::VectorXd ya(n);
  for (Eigen::Index i = 0; i < n; ++i) ya(i) = alpha(i) * y[i];
  const Eigen::VectorXd w = x.transpose() * ya;
  LinearSvmModel model;
  model.w.assign(w.data(), w.data() + w.size());
  model.b = ya.sum();
  model.mean.assign(w.size(), 0.0);
  model.std.assign(w.size(), 1.0);
  model.zero_variance.assign(w.size(), 0);
  model.config = cfg;

  if (diagnostics) {
    const Eigen::VectorXd margins = x * w;
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) hinge += std::max(0.0, 1.0 - y[i] * (margins(i) + model.b));
    diag.primal_objective = 0.5 * (w.squaredNorm() + model.b * model.b) + cfg.C * hinge;
    *diagnostics = std::move(diag);
  }
  return model;
}

LinearSvmModel svm_train_standardized(const SampleMatrix& x, std::span<const int> y, const TrainConfig& cfg,
                                      TrainDiagnostics* diagnostics) {
  check_training_data(x, y);
  const Standardization s = standardize_fit(x);
  LinearSvmModel model = svm_train(standardize_apply(x, s), y, cfg, diagnostics);
  model.mean = s.mean;
  model.std = s.std;
  model.zero_variance = s.zero_variance;
  return model;
}

Prediction svm_predict(const LinearSvmModel& model, std::span<const double> x) {
  if (x.size() != model.w.size()) {
    throw DimensionError("sample has " + std::to_string(x.size()) + " features, model expects " +
                         std::to_string(model.w.size()));
  }
  double score = model.b;
  for (std::size_t i = 0; i < x.size(); ++i) score += model.w[i] * ((x[i] - model.mean[i]) / model.std[i]);
  return {score >= 0.0 ? SmileLabel::Posed : SmileLabel::Spontaneous, score};
}

LinearSvmModel fold_standardization(const LinearSvmModel& model) {
  LinearSvmModel out = model;
  for (std::size_t i = 0; i < model.w.size(); ++i) {
    out.w[i] = model.w[i] / model.std[i];
    out.b -= out.w[i] * model.mean[i];
  }
  out.mean.assign(model.w.size(), 0.0);
  out.std.assign(model.w.size(), 1.0);
  out.zero_variance.assign(model.w.size(), 0);
  return out;
}

std::string model_to_json(const LinearSvmModel& model) {
  const json j = {{"format", "facedyn-svm"},
                  {"version", 1},
                  {"D", model.w.size()},
                  {"w", model.w},
                  {"b", model.b},
                  {"mean", model.mean},
                  {"std", model.std},
                  {"zero_variance", model.zero_variance},
                  {"config", {{"C", model.config.C}, {"tol", model.config.tol}, {"max_iter", model.config.max_iter}}}};
  return j.dump() + "\n";
}

LinearSvmModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (!j.is_object() || j.value("format", "") != "facedyn-svm") throw FormatError("not a facedyn SVM model");
    if (j.at("version").get<int>() != 1)
      throw FormatError("unsupported model version " + std::to_string(j.at("version").get<int>()));
    LinearSvmModel m;
    const auto d = j.at("D").get<std::size_t>();
    m.w = j.at("w").get<std::vector<double>>();
    m.b = j.at("b").get<double>();
    m.mean = j.at("mean").get<std::vector<double>>();
    m.std = j.at("std").get<std::vector<double>>();
    m.zero_variance = j.at("zero_variance").get<std::vector<std::uint8_t>>();
    const auto& c = j.at("config");
    m.config = {c.at("C").get<double>(), c.at("tol").get<double>(), c.at("max_iter").get<int>()};
    if (m.w.size() != d || m.mean.size() != d || m.std.size() != d || m.zero_variance.size() != d)
      throw FormatError("model vectors disagree with D=" + std::to_string(d));
    for (double s : m.std)
      if (!(s > 0.0)) throw FormatError("model std entries must be positive");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt model file: ") + e.what());
  }
}

void save_model(const LinearSvmModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(model));
}

LinearSvmModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace facedyn
