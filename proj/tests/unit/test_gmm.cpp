#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mediatopic/gmm.hpp"
#include "test_support.hpp"

using namespace mediatopic;
using mediatopic::testing::column;

namespace {

GmmModel two_gaussians_1d(double m0, double m1) {
  GmmModel m;
  m.weights = {0.5, 0.5};
  m.means = column({m0, m1});
  m.variances = column({1.0, 1.0});
  return m;
}

// Independent 1-D reference: global Gaussian, EM, split each component at
// mean -/+ 0.2 sd with halved weight, EM again. Plain loops, no shared code.
struct Oracle1d {
  std::vector<double> w, mu, var;
};

Oracle1d oracle_em_1d(const std::vector<double>& x, std::size_t levels, std::size_t iterations) {
  const double n = static_cast<double>(x.size());
  double mean = 0, sq = 0;
  for (double v : x) mean += v;
  mean /= n;
  for (double v : x) sq += (v - mean) * (v - mean);
  Oracle1d o{{1.0}, {mean}, {sq / n}};
  auto em = [&] {
    for (std::size_t it = 0; it < iterations; ++it) {
      const std::size_t k = o.w.size();
      std::vector<double> occ(k, 0), s1(k, 0), s2(k, 0);
      for (double v : x) {
        std::vector<double> p(k);
        double z = 0;
        for (std::size_t c = 0; c < k; ++c) {
          p[c] = o.w[c] * std::exp(-0.5 * (v - o.mu[c]) * (v - o.mu[c]) / o.var[c]) /
                 std::sqrt(2 * M_PI * o.var[c]);
          z += p[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
          occ[c] += p[c] / z;
          s1[c] += p[c] / z * v;
          s2[c] += p[c] / z * v * v;
        }
      }
      for (std::size_t c = 0; c < k; ++c) {
        o.w[c] = occ[c] / n;
        o.mu[c] = s1[c] / occ[c];
        o.var[c] = s2[c] / occ[c] - o.mu[c] * o.mu[c];
      }
    }
  };
  em();
  for (std::size_t l = 1; l < levels; ++l) {
    const std::size_t k = o.w.size();
    for (std::size_t c = 0; c < k; ++c) {
      const double sd = std::sqrt(o.var[c]);
      o.w[c] *= 0.5;
      o.w.push_back(o.w[c]);
      o.mu.push_back(o.mu[c] + 0.2 * sd);
      o.var.push_back(o.var[c]);
      o.mu[c] -= 0.2 * sd;
    }
    em();
  }
  return o;
}

std::vector<double> two_cluster_fixture() {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<double> x;
  for (int i = 0; i < 10; ++i) x.push_back(0.0 + noise(rng));
  for (int i = 0; i < 10; ++i) x.push_back(10.0 + noise(rng));
  return x;
}

Matrix as_column(const std::vector<double>& x) {
  Matrix m(x.size(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) m(i, 0) = x[i];
  return m;
}

}  // namespace

TEST(TrainGmm, SingleGaussianClosedForm) {
  const GmmModel m = train_gmm(column({0.0, 2.0}), 1);
  EXPECT_NEAR(m.means(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(m.variances(0, 0), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.weights[0], 1.0);
}

TEST(TrainGmm, IdenticalDataHitsTheConfiguredFloor) {
  GmmTrainConfig config;
  config.min_variance_floor = 1e-5;
  const GmmModel m = train_gmm(column({3.0, 3.0, 3.0, 3.0}), 1, config);
  EXPECT_EQ(m.variances(0, 0), 1e-5);
  EXPECT_EQ(m.means(0, 0), 3.0);
}

TEST(TrainGmm, TwoClustersMatchReferenceEm) {
  const auto x = two_cluster_fixture();
  // From a split at +-0.2 sd of the pooled fit the components separate
  // slowly, so run well past the default iteration count.
  GmmTrainConfig config;
  config.em_iterations = 60;
  const GmmModel m = train_gmm(as_column(x), 2, config);
  const Oracle1d o = oracle_em_1d(x, 2, 60);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(m.means(c, 0), o.mu[c], 1e-9);
    EXPECT_NEAR(m.variances(c, 0), o.var[c], 1e-9);
    EXPECT_NEAR(m.weights[c], o.w[c], 1e-9);
  }
  const double lo = std::min(m.means(0, 0), m.means(1, 0));
  const double hi = std::max(m.means(0, 0), m.means(1, 0));
  EXPECT_NEAR(lo, 0.0, 0.5);
  EXPECT_NEAR(hi, 10.0, 0.5);
}

TEST(TrainGmm, FixtureClustersWithinTenthOfCentres) {
  // Exact cluster centres: fixture values are symmetric around 0 and 10.
  std::vector<double> x;
  for (double d : {-0.3, -0.1, 0.1, 0.3}) {
    x.push_back(d);
    x.push_back(10.0 + d);
  }
  GmmTrainConfig config;
  config.em_iterations = 60;
  const GmmModel m = train_gmm(as_column(x), 2, config);
  const double lo = std::min(m.means(0, 0), m.means(1, 0));
  const double hi = std::max(m.means(0, 0), m.means(1, 0));
  EXPECT_NEAR(lo, 0.0, 0.1);
  EXPECT_NEAR(hi, 10.0, 0.1);
}

TEST(TrainGmm, ReachesExactComponentCountAndValidates) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(500, 3);
  for (double& v : x.data()) v = n(rng);
  const GmmModel m = train_gmm(x, 16);
  EXPECT_EQ(m.num_components(), 16u);
  EXPECT_NO_THROW(m.validate());
}

TEST(TrainGmm, Preconditions) {
  EXPECT_THROW(train_gmm(column({1, 2, 3}), 3), ArgumentError);
  EXPECT_THROW(train_gmm(column({1, 2, 3}), 4), ArgumentError);
  EXPECT_THROW(train_gmm(column({1, NAN, 3, 4}), 2), ArgumentError);
}

TEST(TrainGmm, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(5000, 2);  // spans several reduction blocks
  for (double& v : x.data()) v = n(rng);
  GmmTrainConfig one, four;
  one.threads = 1;
  four.threads = 4;
  EXPECT_EQ(train_gmm(x, 4, one), train_gmm(x, 4, four));
}

TEST(TrainGmm, EmLogLikelihoodIsMonotoneWithinEachLevel) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(2000, 2);
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t d = 0; d < 2; ++d) x(t, d) = n(rng) + 4.0 * static_cast<double>(t % 4);
  std::vector<EmIterationRecord> trace;
  train_gmm(x, 8, {}, &trace);
  std::size_t checked = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].components != trace[i - 1].components) continue;
    if (trace[i].floor_active || trace[i].rescued) continue;
    const double prev = trace[i - 1].log_likelihood;
    EXPECT_GE(trace[i].log_likelihood, prev - 1e-8 * std::abs(prev)) << "record " << i;
    ++checked;
  }
  EXPECT_GT(checked, 20u);
}

TEST(Posteriors, SingleComponentIsOne) {
  GmmModel m;
  m.weights = {1.0};
  m.means = column({0.0});
  m.variances = column({2.0});
  const auto p = gmm_posteriors(m, std::vector<double>{5.0});
  ASSERT_EQ(p.size(), 1u);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
}

TEST(Posteriors, IdenticalComponentsSplitEvenly) {
  const auto p = gmm_posteriors(two_gaussians_1d(1.0, 1.0), std::vector<double>{3.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Posteriors, DirectLogDensityComparison) {
  const auto p = gmm_posteriors(two_gaussians_1d(0.0, 10.0), std::vector<double>{9.7});
  // log N(9.7;10,1) - log N(9.7;0,1) = (9.7^2 - 0.3^2) / 2
  const double expected = 1.0 / (1.0 + std::exp(-(9.7 * 9.7 - 0.3 * 0.3) / 2.0));
  EXPECT_NEAR(p[1], expected, 1e-15);
  EXPECT_GT(p[1], 0.999);
}

TEST(Posteriors, RandomModelsNormalize) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3, 3), v(0.05, 4);
  for (int trial = 0; trial < 100; ++trial) {
    GmmModel m;
    m.means = Matrix(5, 3);
    m.variances = Matrix(5, 3);
    double total = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      m.weights.push_back(v(rng));
      total += m.weights.back();
    }
    for (double& w : m.weights) w /= total;
    for (double& x : m.means.data()) x = u(rng);
    for (double& x : m.variances.data()) x = v(rng);
    const std::vector<double> frame{u(rng) * 5, u(rng), u(rng)};
    const auto p = gmm_posteriors(m, frame);
    double sum = 0;
    for (double x : p) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-10);
  }
}

TEST(Posteriors, DimensionMismatchThrows) {
  EXPECT_THROW(gmm_posteriors(two_gaussians_1d(0, 1), std::vector<double>{1.0, 2.0}), DimensionError);
}

TEST(Quantize, SingleComponentGivesAllZeros) {
  GmmModel m;
  m.weights = {1.0};
  m.means = column({0.0});
  m.variances = column({1.0});
  const auto q = quantize_document(m, {column({-4, 0, 7})});
  EXPECT_EQ(q.words, (std::vector<std::uint32_t>{0, 0, 0}));
}

TEST(Quantize, EquidistantFrameGoesToLowerIndex) {
  const auto q = quantize_document(two_gaussians_1d(-1.0, 1.0), {column({0.0})});
  EXPECT_EQ(q.words, (std::vector<std::uint32_t>{0}));
}

TEST(Quantize, TwoSeparatedComponents) {
  const auto q = quantize_document(two_gaussians_1d(0.0, 10.0), {column({-0.1, 9.7})});
  EXPECT_EQ(q.words, (std::vector<std::uint32_t>{0, 1}));
}

TEST(Quantize, MatchesPosteriorArgmax) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5, 5);
  GmmModel m;
  m.weights = {0.2, 0.3, 0.5};
  m.means = column({-2.0, 0.5, 3.0});
  m.variances = column({0.5, 2.0, 1.0});
  Matrix frames(200, 1);
  for (double& v : frames.data()) v = u(rng);
  const auto q = quantize_document(m, {frames});
  for (std::size_t t = 0; t < frames.rows(); ++t)
    EXPECT_EQ(q.words[t], argmax(gmm_posteriors(m, frames.row(t))));
}

TEST(Quantize, InvariantToCommonMonotoneRescalingOfLogDensities) {
  // Scaling every variance by c and every mean by sqrt(c) together with the
  // frames leaves each log-density shifted by the same constant.
  GmmModel m = two_gaussians_1d(0.0, 3.0);
  m.weights = {0.3, 0.7};
  GmmModel scaled = m;
  const double c = 4.0;
  for (double& v : scaled.variances.data()) v *= c;
  for (double& v : scaled.means.data()) v *= std::sqrt(c);
  const Matrix frames = column({-1.0, 0.9, 1.4, 1.6, 5.0});
  Matrix scaled_frames = frames;
  for (double& v : scaled_frames.data()) v *= std::sqrt(c);
  EXPECT_EQ(quantize_document(m, {frames}).words, quantize_document(scaled, {scaled_frames}).words);
}

TEST(Quantize, DimensionMismatchThrows) {
  EXPECT_THROW(quantize_document(two_gaussians_1d(0, 1), {Matrix(2, 2)}), DimensionError);
}
