#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mediatopic/svm.hpp"
#include "oracles.hpp"

using namespace mediatopic;
using mediatopic::testing::random_svm_instance;
using mediatopic::testing::reference_svm_dual;
using mediatopic::testing::svm_dual_value;

namespace {

SvmModel toy_model() {
  const std::vector<std::vector<double>> x{{-1.0, 0.0}, {1.0, 0.0}};
  const std::vector<std::size_t> y{0, 1};
  return train_svm(x, y, 2);
}

}  // namespace

TEST(TrainSvm, ToySeparableCase) {
  const auto m = toy_model();
  EXPECT_EQ(svm_predict(m, std::vector<double>{-1.0, 0.0}), 0u);
  EXPECT_EQ(svm_predict(m, std::vector<double>{1.0, 0.0}), 1u);
  // Max-margin separator: w proportional to (1, 0), boundary at x = 0.
  EXPECT_NEAR(m.weights(1, 1), 0.0, 1e-9);
  EXPECT_NEAR(m.weights(1, 2), 0.0, 1e-9);
  EXPECT_GT(m.weights(1, 0), 0.0);
  const auto s = svm_scores(m, std::vector<double>{2.0, 0.0});
  EXPECT_GT(s[1], 0.0);
  EXPECT_LT(s[0], 0.0);
  EXPECT_EQ(svm_predict(m, std::vector<double>{-3.0, 1.0}), 0u);
}

TEST(TrainSvm, IdenticalFeaturesPredictMajority) {
  const std::vector<std::vector<double>> x(5, std::vector<double>{0.5, 0.5});
  const std::vector<std::size_t> y{1, 1, 1, 0, 0};
  const auto m = train_svm(x, y, 2);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) correct += svm_predict(m, x[i]) == y[i];
  EXPECT_EQ(svm_predict(m, x[0]), 1u);
  EXPECT_DOUBLE_EQ(static_cast<double>(correct) / 5.0, 0.6);
}

TEST(TrainSvm, DualMatchesReferenceSolver) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_svm_instance(rng);
    const auto r = train_binary_svm(inst.x, inst.y, inst.c, inst.c, {}, 17);
    const double reference = reference_svm_dual(inst);
    EXPECT_NEAR(r.dual, reference, 1e-6) << "trial " << trial;
    // The reported dual agrees with an independent evaluation of its alphas.
    EXPECT_NEAR(svm_dual_value(inst, r.alpha), r.dual, 1e-9);
    EXPECT_LE(r.primal - r.dual, 1e-6 * (1.0 + std::abs(r.primal)));
  }
}

TEST(TrainSvm, DualIsMonotonePerEpoch) {
  std::mt19937_64 rng(99);
  SvmTrainConfig config;
  config.gap_tolerance = 0.0;
  config.max_epochs = 60;
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_svm_instance(rng, 30, 4);
    const auto r = train_binary_svm(inst.x, inst.y, inst.c, inst.c, config, trial);
    for (std::size_t e = 1; e < r.dual_trace.size(); ++e)
      EXPECT_GE(r.dual_trace[e], r.dual_trace[e - 1] - 1e-12);
  }
}

TEST(TrainSvm, ThreeClassOneHots) {
  const std::vector<std::vector<double>> x{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const std::vector<std::size_t> y{0, 1, 2};
  const auto m = train_svm(x, y, 3);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(svm_predict(m, x[c]), c);
}

TEST(TrainSvm, ZeroPaddingLeavesPredictionsUnchanged) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> x, padded;
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < 40; ++i) {
    std::vector<double> row{g(rng) + static_cast<double>(i % 3), g(rng)};
    y.push_back(i % 3);
    x.push_back(row);
    row.push_back(0.0);
    padded.push_back(row);
  }
  SvmTrainConfig config;
  config.seed = 4;
  const auto a = train_svm(x, y, 3, config);
  const auto b = train_svm(padded, y, 3, config);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(b.weights(c, 2), 0.0);
  for (int t = 0; t < 50; ++t) {
    const std::vector<double> p{3 * g(rng), 3 * g(rng)};
    EXPECT_EQ(svm_predict(a, p), svm_predict(b, std::vector<double>{p[0], p[1], 0.0}));
  }
}

TEST(TrainSvm, Errors) {
  const std::vector<std::vector<double>> x{{1.0}, {2.0}};
  EXPECT_THROW(train_svm(x, std::vector<std::size_t>{0, 0}, 2), ArgumentError);
  const std::vector<std::vector<double>> ragged{{1.0}, {2.0, 3.0}};
  EXPECT_THROW(train_svm(ragged, std::vector<std::size_t>{0, 1}, 2), DimensionError);
  EXPECT_THROW(train_svm(x, std::vector<std::size_t>{0}, 2), DimensionError);
  EXPECT_THROW(train_svm(x, std::vector<std::size_t>{0, 2}, 2), ArgumentError);
  SvmTrainConfig bad;
  bad.c = 0.0;
  EXPECT_THROW(train_svm(x, std::vector<std::size_t>{0, 1}, 2, bad), ArgumentError);
  EXPECT_THROW(svm_scores(toy_model(), std::vector<double>{1.0}), DimensionError);
}

TEST(TrainSvm, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> x;
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < 30; ++i) {
    x.push_back({g(rng), g(rng)});
    y.push_back(i % 4);
  }
  SvmTrainConfig a, b;
  a.threads = 1;
  b.threads = 4;
  EXPECT_EQ(train_svm(x, y, 4, a), train_svm(x, y, 4, b));
}

TEST(SvmScores, ZeroModelAndSymmetry) {
  SvmModel zero;
  zero.feature_dim = 2;
  zero.weights = Matrix(3, 3);
  EXPECT_EQ(svm_scores(zero, std::vector<double>{4.0, -1.0}), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(svm_predict(zero, std::vector<double>{4.0, -1.0}), 0u);

  SvmModel sym;
  sym.feature_dim = 2;
  sym.weights = Matrix(2, 3);
  const std::vector<double> w{0.7, -1.3, 0.2};
  for (std::size_t j = 0; j < 3; ++j) {
    sym.weights(0, j) = w[j];
    sym.weights(1, j) = -w[j];
  }
  const auto s = svm_scores(sym, std::vector<double>{1.5, 2.0});
  EXPECT_DOUBLE_EQ(s[1], -s[0]);
}
