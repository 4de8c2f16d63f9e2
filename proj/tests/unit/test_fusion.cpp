#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mediatopic/fusion.hpp"
#include "oracles.hpp"

using namespace mediatopic;

namespace {

std::vector<std::size_t> argmax_rows(const Matrix& m) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(argmax(m.row(r)));
  return out;
}

std::vector<std::size_t> fused_argmax(const FusionModel& model, const std::vector<Matrix>& systems) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < systems.front().rows(); ++r) {
    std::vector<std::vector<double>> rows;
    for (const auto& s : systems) rows.emplace_back(s.row(r).begin(), s.row(r).end());
    out.push_back(argmax(fuse_scores(model, rows)));
  }
  return out;
}

// Scores favor the label by `margin`, plus Gaussian noise.
Matrix informative_scores(std::mt19937_64& rng, const std::vector<std::size_t>& labels,
                          std::size_t classes, double margin, double noise) {
  std::normal_distribution<double> g(0.0, noise);
  Matrix m(labels.size(), classes);
  for (std::size_t n = 0; n < labels.size(); ++n)
    for (std::size_t c = 0; c < classes; ++c) m(n, c) = g(rng) + (c == labels[n] ? margin : 0.0);
  return m;
}

std::vector<std::size_t> random_labels(std::mt19937_64& rng, std::size_t n, std::size_t classes) {
  std::uniform_int_distribution<std::size_t> d(0, classes - 1);
  std::vector<std::size_t> y(n);
  for (auto& v : y) v = d(rng);
  y[0] = 0;
  y[1] = 1;
  return y;
}

}  // namespace

TEST(FusionObjective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = mediatopic::testing::random_fusion_instance(rng);
    EXPECT_LT(mediatopic::testing::fusion_gradient_error(inst, 1e-6), 1e-4) << "trial " << trial;
  }
}

TEST(TrainFusion, PerfectSingleSystem) {
  std::mt19937_64 rng(3);
  const auto y = random_labels(rng, 60, 4);
  const std::vector<Matrix> systems{informative_scores(rng, y, 4, 1.0, 0.2)};
  ASSERT_EQ(argmax_rows(systems[0]), y);
  const auto m = train_fusion(systems, y);
  EXPECT_EQ(fused_argmax(m, systems), y);
}

TEST(TrainFusion, PerfectSystemOutweighsNoise) {
  std::mt19937_64 rng(200);
  const auto y = random_labels(rng, 200, 3);
  const std::vector<Matrix> systems{informative_scores(rng, y, 3, 1.0, 0.2),
                                    informative_scores(rng, y, 3, 0.0, 1.0)};
  const auto m = train_fusion(systems, y);
  EXPECT_EQ(fused_argmax(m, systems), y);
  EXPECT_GT(std::abs(m.system_scales[0]), std::abs(m.system_scales[1]));
}

TEST(TrainFusion, ObjectiveMonotoneOverAcceptedSteps) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto y = random_labels(rng, 80, 3);
    const std::vector<Matrix> systems{informative_scores(rng, y, 3, 0.8, 1.0),
                                      informative_scores(rng, y, 3, 0.3, 1.0)};
    std::vector<FusionTrainRecord> trace;
    train_fusion(systems, y, {}, &trace);
    ASSERT_GE(trace.size(), 2u);
    for (std::size_t i = 1; i < trace.size(); ++i)
      EXPECT_GE(trace[i].objective, trace[i - 1].objective - 1e-12);
  }
}

TEST(TrainFusion, ArgmaxInvariantToPerRowShift) {
  std::mt19937_64 rng(7);
  const auto y = random_labels(rng, 50, 4);
  const std::vector<Matrix> systems{informative_scores(rng, y, 4, 0.5, 1.0),
                                    informative_scores(rng, y, 4, 0.5, 1.0)};
  const auto m = train_fusion(systems, y);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  std::vector<Matrix> shifted = systems;
  for (auto& s : shifted)
    for (std::size_t r = 0; r < s.rows(); ++r) {
      const double c = shift(rng);
      for (double& v : s.row(r)) v += c;
    }
  EXPECT_EQ(fused_argmax(m, shifted), fused_argmax(m, systems));
}

TEST(TrainFusion, SingleSystemKeepsArgmaxOnLargeMargins) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    // Top score leads the runner-up by at least 1 on every row, so the
    // learned offsets cannot reorder any row.
    std::uniform_int_distribution<std::size_t> yd(0, 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 60;
    Matrix s(n, 3);
    std::vector<std::size_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t top = yd(rng);
      for (std::size_t c = 0; c < 3; ++c) s(i, c) = u(rng) - (c == top ? -3.0 : 0.0);
      // Labels follow the system 80% of the time.
      y[i] = (i % 5 == 0) ? (top + 1) % 3 : top;
    }
    const std::vector<Matrix> systems{s};
    const auto m = train_fusion(systems, y);
    ASSERT_GT(m.system_scales[0], 0.0);
    EXPECT_EQ(fused_argmax(m, systems), argmax_rows(s));
  }
}

TEST(TrainFusion, Errors) {
  const std::vector<Matrix> systems{Matrix(4, 2), Matrix(4, 3)};
  const std::vector<std::size_t> y{0, 1, 0, 1};
  EXPECT_THROW(train_fusion(systems, y), DimensionError);
  const std::vector<Matrix> one{Matrix(4, 2)};
  EXPECT_THROW(train_fusion(one, std::vector<std::size_t>{1, 1, 1, 1}), ArgumentError);
  EXPECT_THROW(train_fusion(one, std::vector<std::size_t>{0, 1}), DimensionError);
  EXPECT_THROW(train_fusion(std::vector<Matrix>{}, y), ArgumentError);
}

TEST(FuseScores, Examples) {
  FusionModel identity{{1.0}, {0.0, 0.0, 0.0}};
  const std::vector<std::vector<double>> one{{0.3, -2.0, 5.0}};
  EXPECT_EQ(fuse_scores(identity, one), one[0]);

  FusionModel offsets{{0.0, 0.0}, {3.0, 1.0}};
  EXPECT_EQ(fuse_scores(offsets, std::vector<std::vector<double>>{{9.0, -4.0}, {2.0, 7.0}}),
            (std::vector<double>{3.0, 1.0}));

  FusionModel mix{{2.0, 1.0}, {0.0, 0.0}};
  EXPECT_EQ(fuse_scores(mix, std::vector<std::vector<double>>{{1.0, 0.0}, {0.0, 2.0}}),
            (std::vector<double>{2.0, 2.0}));
  EXPECT_THROW(fuse_scores(mix, one), DimensionError);
}
