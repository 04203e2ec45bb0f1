#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "facedyn/classify.hpp"

using namespace facedyn;

namespace {

SampleMatrix rows(std::initializer_list<std::initializer_list<double>> r) {
  SampleMatrix m(r.size(), r.begin()->size());
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Two Gaussian clouds in d dimensions, centered at +/- shift along axis 0.
struct Blobs {
  SampleMatrix x;
  std::vector<int> y;
};

Blobs blobs(int n, int d, double shift, double noise, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, noise);
  Blobs b{SampleMatrix(n, d), std::vector<int>(n)};
  for (int i = 0; i < n; ++i) {
    b.y[i] = i % 2 == 0 ? 1 : -1;
    for (int j = 0; j < d; ++j) b.x(i, j) = g(rng) + (j == 0 ? shift * b.y[i] : 0.0) + 3.0 * j;
  }
  return b;
}

std::vector<double> row_of(const SampleMatrix& m, Eigen::Index r) {
  return {m.row(r).data(), m.row(r).data() + m.cols()};
}

}  // namespace

TEST_CASE("standardize_fit") {
  const auto s = standardize_fit(rows({{0}, {2}}));
  CHECK(s.mean[0] == 1.0);
  CHECK(s.std[0] == 1.0);
  CHECK(s.zero_variance[0] == 0);

  const auto two = standardize_fit(rows({{1, 2}, {3, 4}}));
  CHECK(two.mean == std::vector<double>{2, 3});
  CHECK(two.std == std::vector<double>{1, 1});

  const auto flat = standardize_fit(rows({{5, 1}, {5, 2}, {5, 3}}));
  CHECK(flat.std[0] == 1.0);
  CHECK(flat.zero_variance[0] == 1);
  CHECK(flat.zero_variance[1] == 0);
  CHECK_THROWS_AS(standardize_fit(rows({{1, 2}})), DimensionError);
}

TEST_CASE("symmetric separable pair") {
  const auto x = rows({{1, 0}, {-1, 0}});
  const std::vector<int> y{1, -1};
  const auto m = svm_train(x, y);
  CHECK(svm_predict(m, row_of(x, 0)).label == SmileLabel::Posed);
  CHECK(svm_predict(m, row_of(x, 1)).label == SmileLabel::Spontaneous);
  CHECK(std::abs(std::atan2(m.w[1], m.w[0])) < 1e-3);
}

TEST_CASE("four-point set matches the closed-form maximum margin") {
  const auto x = rows({{1, 0.1}, {1, -0.1}, {-1, 0.1}, {-1, -0.1}});
  const std::vector<int> y{1, 1, -1, -1};
  TrainConfig cfg;
  cfg.tol = 1e-9;
  const double tol = TrainConfig{}.tol;
  const auto m = svm_train(x, y, cfg);
  CHECK(std::abs(m.w[0] - 1.0) < tol);
  CHECK(std::abs(m.w[1]) < tol);
  CHECK(std::abs(m.b) < tol);
}

TEST_CASE("dual objective never increases and closes the duality gap") {
  const auto data = blobs(60, 6, 0.6, 1.0, 4);  // overlapping classes
  TrainDiagnostics diag;
  TrainConfig cfg;
  svm_train_standardized(data.x, data.y, cfg, &diag);
  CHECK(diag.converged);
  REQUIRE(diag.dual_objective.size() >= 2);
  for (std::size_t i = 1; i < diag.dual_objective.size(); ++i)
    CHECK(diag.dual_objective[i] <= diag.dual_objective[i - 1] + 1e-12 * std::abs(diag.dual_objective[i - 1]));
  CHECK(std::abs(diag.primal_objective + diag.dual_objective.back()) < 1e-2 * diag.primal_objective);
}

TEST_CASE("duplicating every sample leaves the decision function unchanged") {
  const auto data = blobs(30, 4, 4.0, 0.5, 7);
  SampleMatrix doubled(60, 4);
  std::vector<int> y2;
  for (int i = 0; i < 30; ++i) {
    doubled.row(2 * i) = data.x.row(i);
    doubled.row(2 * i + 1) = data.x.row(i);
    y2.push_back(data.y[i]);
    y2.push_back(data.y[i]);
  }
  TrainConfig cfg;
  cfg.tol = 1e-10;
  const auto a = svm_train(data.x, data.y, cfg);
  const auto b = svm_train(doubled, y2, cfg);
  for (std::size_t j = 0; j < a.w.size(); ++j) CHECK(std::abs(a.w[j] - b.w[j]) < 1e-6);
  CHECK(std::abs(a.b - b.b) < 1e-6);
  for (int i = 0; i < 30; ++i)
    CHECK(std::abs(svm_predict(a, row_of(data.x, i)).score - svm_predict(b, row_of(data.x, i)).score) < 1e-6);
}

TEST_CASE("prediction sign rules") {
  const auto data = blobs(40, 3, 3.0, 0.5, 2);
  const auto m = svm_train_standardized(data.x, data.y);
  const auto deep = svm_predict(m, std::vector<double>{10.0, 3.0, 6.0});
  CHECK(deep.label == SmileLabel::Posed);
  CHECK(deep.score > 0.0);

  LinearSvmModel tie;
  tie.w = {0.0, 0.0};
  tie.mean = {0.0, 0.0};
  tie.std = {1.0, 1.0};
  tie.zero_variance = {0, 0};
  CHECK(svm_predict(tie, std::vector<double>{3.0, -1.0}).label == SmileLabel::Posed);

  LinearSvmModel neg = m;
  for (double& w : neg.w) w = -w;
  neg.b = -m.b;
  for (int i = 0; i < 40; ++i) {
    const auto p = svm_predict(m, row_of(data.x, i));
    if (p.score != 0.0) CHECK(svm_predict(neg, row_of(data.x, i)).label != p.label);
  }
  CHECK_THROWS_AS(svm_predict(m, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("folded standardization predicts identical labels") {
  const auto train = blobs(50, 5, 1.0, 1.0, 11);
  const auto test = blobs(40, 5, 1.0, 1.0, 12);
  const auto m = svm_train_standardized(train.x, train.y);
  const auto folded = fold_standardization(m);
  for (double s : folded.std) CHECK(s == 1.0);
  for (int i = 0; i < 40; ++i) {
    const auto a = svm_predict(m, row_of(test.x, i));
    const auto b = svm_predict(folded, row_of(test.x, i));
    CHECK(a.label == b.label);
    CHECK(a.score == doctest::Approx(b.score).epsilon(1e-9));
  }
}

TEST_CASE("consistent feature permutation preserves labels") {
  const auto train = blobs(50, 5, 1.0, 1.0, 21);
  const auto test = blobs(30, 5, 1.0, 1.0, 22);
  const std::vector<int> perm{3, 0, 4, 1, 2};
  auto permute = [&](const SampleMatrix& x) {
    SampleMatrix p(x.rows(), x.cols());
    for (int j = 0; j < 5; ++j) p.col(j) = x.col(perm[j]);
    return p;
  };
  const auto a = svm_train_standardized(train.x, train.y);
  const auto b = svm_train_standardized(permute(train.x), train.y);
  const auto pt = permute(test.x);
  for (int i = 0; i < 30; ++i)
    CHECK(svm_predict(a, row_of(test.x, i)).label == svm_predict(b, row_of(pt, i)).label);
}

TEST_CASE("training input validation") {
  CHECK_THROWS_AS(svm_train(rows({{1}, {2}}), std::vector<int>{1, 1}), TrainingError);
  CHECK_THROWS_AS(svm_train(rows({{1}, {std::nan("")}}), std::vector<int>{1, -1}), TrainingError);
  CHECK_THROWS_AS(svm_train(rows({{1}, {2}}), std::vector<int>{1}), DimensionError);
  TrainConfig bad;
  bad.C = 0.0;
  CHECK_THROWS_AS(svm_train(rows({{1}, {2}}), std::vector<int>{1, -1}, bad), ConfigError);
}

TEST_CASE("model files round-trip exactly") {
  const auto data = blobs(20, 3, 1.0, 1.0, 5);
  auto m = svm_train_standardized(data.x, data.y);
  m.w[0] = 0.1 + 0.2;  // a value with no short decimal form
  const auto path = std::filesystem::temp_directory_path() / "facedyn_test_model.json";
  save_model(m, path);
  CHECK(load_model(path) == m);

  LinearSvmModel big;
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 25600; ++i) {
    big.w.push_back(g(rng));
    big.mean.push_back(g(rng));
    big.std.push_back(std::exp(g(rng)));
    big.zero_variance.push_back(i % 7 == 0);
  }
  big.b = g(rng);
  save_model(big, path);
  CHECK(load_model(path) == big);

  auto text = model_to_json(m);
  CHECK_THROWS_AS(model_from_json("{\"format\":\"other\",\"version\":1}"), FormatError);
  CHECK_THROWS_AS(model_from_json(text.substr(0, text.size() / 2)), FormatError);
  const auto v2 = text.replace(text.find("\"version\":1"), 11, "\"version\":2");
  CHECK_THROWS_AS(model_from_json(v2), FormatError);
  std::filesystem::remove(path);
}
