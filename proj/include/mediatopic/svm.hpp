#pragma once

// One-vs-rest linear SVMs. Each binary problem
//   min_w 1/2 |w|^2 + sum_i C_i max(0, 1 - y_i w.[x_i|1])
// is solved in the dual by coordinate descent over the box 0 <= a_i <= C_i.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/archive.hpp"
#include "mediatopic/errors.hpp"
#include "mediatopic/matrix.hpp"
#include "mediatopic/numeric.hpp"
#include "mediatopic/parallel.hpp"
#include "mediatopic/random.hpp"

namespace mediatopic {

struct SvmTrainConfig {
  double c = 1.0;
  std::size_t max_epochs = 1000;
  double gap_tolerance = 1e-8;  // stop when primal - dual <= tol * (1 + |primal|)
  bool balance_classes = false; // scale C by inverse class frequency
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

struct SvmModel {
  std::size_t feature_dim = 0;
  double c_param = 1.0;
  Matrix weights;  // classes x (feature_dim + 1); last column is the bias

  std::size_t num_classes() const { return weights.rows(); }

  void validate() const {
    if (weights.cols() != feature_dim + 1) throw ValidationError("SVM weight shape mismatch");
    for (double w : weights.data())
      if (!std::isfinite(w)) throw ValidationError("SVM weight is not finite");
  }
  bool operator==(const SvmModel&) const = default;
};

struct BinarySvmResult {
  std::vector<double> weights;  // feature_dim + 1
  std::vector<double> alpha;    // dual variables
  std::vector<double> dual_trace;
  double primal = 0.0;
  double dual = 0.0;
  std::size_t epochs = 0;
};

namespace detail {

inline double dot_augmented(std::span<const double> w, std::span<const double> x) {
  double s = w[x.size()];
  for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
  return s;
}

}  // namespace detail

// Rows of `features` are the un-augmented inputs; labels are +1 / -1.
inline BinarySvmResult train_binary_svm(const Matrix& features, std::span<const int> labels,
                                        double c_positive, double c_negative,
                                        const SvmTrainConfig& config, std::uint64_t seed) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (labels.size() != n) throw DimensionError("label count differs from feature rows");
  std::vector<double> upper(n), q_diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 1 && labels[i] != -1) throw ArgumentError("binary SVM labels must be +/-1");
    upper[i] = labels[i] > 0 ? c_positive : c_negative;
    double sq = 1.0;
    for (double v : features.row(i)) sq += v * v;
    q_diag[i] = sq;
  }

  BinarySvmResult out;
  out.alpha.assign(n, 0.0);
  out.weights.assign(d + 1, 0.0);
  auto& w = out.weights;
  auto& a = out.alpha;

  auto recompute_w = [&] {
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] == 0.0) continue;
      const double s = a[i] * labels[i];
      const auto x = features.row(i);
      for (std::size_t j = 0; j < d; ++j) w[j] += s * x[j];
      w[d] += s;
    }
  };
  auto objectives = [&] {
    double norm2 = 0.0;
    for (double v : w) norm2 += v * v;
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      hinge += upper[i] * std::max(0.0, 1.0 - labels[i] * detail::dot_augmented(w, features.row(i)));
    const double alpha_sum = std::accumulate(a.begin(), a.end(), 0.0);
    out.primal = 0.5 * norm2 + hinge;
    out.dual = alpha_sum - 0.5 * norm2;
  };

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const auto x = features.row(i);
      const double g = labels[i] * detail::dot_augmented(w, x) - 1.0;
      double pg = g;
      if (a[i] == 0.0) pg = std::min(g, 0.0);
      else if (a[i] == upper[i]) pg = std::max(g, 0.0);
      if (pg == 0.0) continue;
      const double updated = std::clamp(a[i] - g / q_diag[i], 0.0, upper[i]);
      const double step = (updated - a[i]) * labels[i];
      a[i] = updated;
      for (std::size_t j = 0; j < d; ++j) w[j] += step * x[j];
      w[d] += step;
    }
    recompute_w();  // drop accumulated rounding drift
    objectives();
    out.dual_trace.push_back(out.dual);
    out.epochs = epoch + 1;
    if (out.primal - out.dual <= config.gap_tolerance * (1.0 + std::abs(out.primal))) break;
  }
  if (config.max_epochs == 0) objectives();
  return out;
}

inline SvmModel train_svm(std::span<const std::vector<double>> features,
                          std::span<const std::size_t> labels, std::size_t num_classes,
                          const SvmTrainConfig& config = {},
                          std::vector<BinarySvmResult>* diagnostics = nullptr) {
  if (features.empty()) throw ArgumentError("no training features");
  if (features.size() != labels.size())
    throw DimensionError("feature and label counts differ");
  if (!(config.c > 0.0)) throw ArgumentError("SVM C must be positive");
  const std::size_t dim = features.front().size();
  Matrix x(features.size(), dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim)
      throw DimensionError(fmt::format("feature {} has dimension {}, expected {}", i,
                                       features[i].size(), dim));
    std::copy(features[i].begin(), features[i].end(), x.row(i).begin());
  }
  std::set<std::size_t> present(labels.begin(), labels.end());
  if (present.size() < 2) throw ArgumentError("SVM training needs at least two classes");
  if (*present.rbegin() >= num_classes)
    throw ArgumentError(fmt::format("label {} outside {} classes", *present.rbegin(), num_classes));

  SvmModel model;
  model.feature_dim = dim;
  model.c_param = config.c;
  model.weights = Matrix(num_classes, dim + 1);
  std::vector<BinarySvmResult> results(num_classes);
  const double n = static_cast<double>(labels.size());
  parallel_for(num_classes, config.threads, [&](std::size_t c) {
    std::vector<int> y(labels.size());
    std::size_t positives = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      y[i] = labels[i] == c ? 1 : -1;
      positives += labels[i] == c;
    }
    double c_pos = config.c, c_neg = config.c;
    if (config.balance_classes && positives > 0 && positives < labels.size()) {
      c_pos = config.c * n / (2.0 * static_cast<double>(positives));
      c_neg = config.c * n / (2.0 * static_cast<double>(labels.size() - positives));
    }
    results[c] = train_binary_svm(x, y, c_pos, c_neg, config,
                                  derive_seed(config.seed, fmt::format("svm-class-{}", c)));
  });
  for (std::size_t c = 0; c < num_classes; ++c)
    std::copy(results[c].weights.begin(), results[c].weights.end(), model.weights.row(c).begin());
  if (diagnostics) *diagnostics = std::move(results);
  model.validate();
  return model;
}

// Per-class decision values w_c . [x | 1].
inline std::vector<double> svm_scores(const SvmModel& model, std::span<const double> feature) {
  if (feature.size() != model.feature_dim)
    throw DimensionError(fmt::format("feature has dimension {}, SVM expects {}", feature.size(),
                                     model.feature_dim));
  std::vector<double> scores(model.num_classes());
  for (std::size_t c = 0; c < scores.size(); ++c)
    scores[c] = detail::dot_augmented(model.weights.row(c), feature);
  return scores;
}

inline std::size_t svm_predict(const SvmModel& model, std::span<const double> feature) {
  return argmax(svm_scores(model, feature));
}

template <>
struct ModelTraits<SvmModel> {
  static constexpr ModelType type = ModelType::svm;
  static constexpr std::string_view name = "SvmModel";
  static void write(ByteWriter& w, const SvmModel& m) {
    w.put_u64(m.feature_dim);
    w.put_f64(m.c_param);
    w.put_matrix(m.weights);
  }
  static SvmModel read(ByteReader& r) {
    SvmModel m;
    m.feature_dim = r.get_u64();
    m.c_param = r.get_f64();
    m.weights = r.get_matrix();
    m.validate();
    return m;
  }
};

}  // namespace mediatopic
