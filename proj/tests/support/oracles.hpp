#pragma once

// Independent reference computations shared by the unit and acceptance
// suites. None of these call into the code they check, beyond the public
// objective functions being compared.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mediatopic/fusion.hpp"
#include "mediatopic/lda.hpp"

namespace mediatopic::testing {

// ---- LDA ----

struct LdaInstance {
  LdaModel model;
  WeightedDocument doc;
};

inline LdaModel lda_model_from_probs(const std::vector<std::vector<double>>& beta, double alpha) {
  LdaModel m;
  m.alpha = alpha;
  m.log_beta = Matrix(beta.size(), beta.front().size());
  for (std::size_t k = 0; k < beta.size(); ++k)
    for (std::size_t v = 0; v < beta[k].size(); ++v) m.log_beta(k, v) = std::log(beta[k][v]);
  return m;
}

inline WeightedDocument counts_doc(const std::vector<std::pair<std::uint32_t, double>>& entries) {
  WeightedDocument d;
  for (auto [t, m] : entries) {
    d.entries.push_back({t, m});
    d.total_mass += m;
  }
  return d;
}

// K <= 3, V <= 8, T <= 6 with integer counts, small enough to enumerate.
inline LdaInstance random_lda_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> kd(1, 3), vd(2, 8), td(1, 6);
  std::uniform_real_distribution<double> u(0.05, 1.0), a(0.1, 2.0);
  const std::size_t k = kd(rng), v = vd(rng), t = td(rng);
  std::vector<std::vector<double>> beta(k, std::vector<double>(v));
  for (auto& row : beta) {
    double s = 0;
    for (double& x : row) s += (x = u(rng));
    for (double& x : row) x /= s;
  }
  std::vector<double> counts(v, 0.0);
  std::uniform_int_distribution<std::size_t> pick(0, v - 1);
  for (std::size_t i = 0; i < t; ++i) counts[pick(rng)] += 1.0;
  std::vector<std::pair<std::uint32_t, double>> entries;
  for (std::size_t i = 0; i < v; ++i)
    if (counts[i] > 0) entries.push_back({static_cast<std::uint32_t>(i), counts[i]});
  const double alpha = a(rng);
  return {lda_model_from_probs(beta, alpha), counts_doc(entries)};
}

// ---- SVM ----

struct SvmInstance {
  Matrix x;             // n x d, un-augmented
  std::vector<int> y;   // +1 / -1
  double c = 1.0;
};

// Noisy linear labels so some instances are inseparable and the box binds.
inline SvmInstance random_svm_instance(std::mt19937_64& rng, std::size_t n = 20, std::size_t d = 3) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> cd(0.1, 10.0);
  SvmInstance inst;
  inst.x = Matrix(n, d);
  std::vector<double> direction(d);
  for (double& v : direction) v = g(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.3 * g(rng);
    for (std::size_t j = 0; j < d; ++j) s += direction[j] * (inst.x(i, j) = g(rng));
    inst.y.push_back(s >= 0 ? 1 : -1);
  }
  // Both labels must appear.
  inst.y[0] = 1;
  inst.y[1] = -1;
  inst.c = cd(rng);
  return inst;
}

// Dual of the bias-augmented L1-loss SVM:
//   max_a  sum a - 0.5 a'Qa,  0 <= a <= C,  Q_ij = y_i y_j (x_i.x_j + 1).
inline double svm_dual_value(const SvmInstance& inst, const std::vector<double>& a) {
  const std::size_t n = inst.x.rows(), d = inst.x.cols();
  std::vector<double> w(d + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) w[j] += a[i] * inst.y[i] * inst.x(i, j);
    w[d] += a[i] * inst.y[i];
  }
  double norm2 = 0.0;
  for (double v : w) norm2 += v * v;
  return std::accumulate(a.begin(), a.end(), 0.0) - 0.5 * norm2;
}

// Dense accelerated projected gradient with adaptive restart, run far past
// the precision the comparison needs.
inline double reference_svm_dual(const SvmInstance& inst, std::size_t iterations = 200000) {
  const std::size_t n = inst.x.rows(), d = inst.x.cols();
  Matrix q(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      double s = 1.0;
      for (std::size_t j = 0; j < d; ++j) s += inst.x(i, j) * inst.x(k, j);
      q(i, k) = inst.y[i] * inst.y[k] * s;
    }
  // Largest eigenvalue by power iteration, padded for safety.
  std::vector<double> v(n, 1.0), qv(n);
  double lambda = 1.0;
  for (int it = 0; it < 500; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      qv[i] = 0.0;
      for (std::size_t k = 0; k < n; ++k) qv[i] += q(i, k) * v[k];
    }
    double norm = 0.0;
    for (double t : qv) norm += t * t;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    lambda = norm;
    for (std::size_t i = 0; i < n; ++i) v[i] = qv[i] / norm;
  }
  const double step = 1.0 / (1.05 * lambda);
  auto objective = [&](const std::vector<double>& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t k = 0; k < n; ++k) row += q(i, k) * a[k];
      s += a[i] - 0.5 * a[i] * row;
    }
    return s;
  };
  std::vector<double> a(n, 0.0), z = a, next(n);
  double t = 1.0, value = objective(a);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double grad = 1.0;
      for (std::size_t k = 0; k < n; ++k) grad -= q(i, k) * z[k];
      next[i] = std::clamp(z[i] + step * grad, 0.0, inst.c);
    }
    const double next_value = objective(next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (next_value < value) {
      // Momentum overshot: restart from the last iterate.
      z = a;
      t = 1.0;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = next[i] + ((t - 1.0) / t_next) * (next[i] - a[i]);
    a = next;
    value = next_value;
    t = t_next;
  }
  return value;
}

// ---- fusion ----

struct FusionInstance {
  std::vector<Matrix> systems;
  std::vector<std::size_t> labels;
  FusionModel model;
};

inline FusionInstance random_fusion_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> sd(1, 3), cd(2, 5), nd(5, 40);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t s = sd(rng), c = cd(rng), n = nd(rng);
  FusionInstance inst;
  for (std::size_t k = 0; k < s; ++k) {
    Matrix m(n, c);
    for (double& v : m.data()) v = 2.0 * g(rng);
    inst.systems.push_back(std::move(m));
  }
  std::uniform_int_distribution<std::size_t> yd(0, c - 1);
  for (std::size_t i = 0; i < n; ++i) inst.labels.push_back(yd(rng));
  for (std::size_t k = 0; k < s; ++k) inst.model.system_scales.push_back(g(rng));
  for (std::size_t j = 0; j < c; ++j) inst.model.class_offsets.push_back(g(rng));
  return inst;
}

// Max over parameters of |analytic - central difference| / max(1, |fd|).
inline double fusion_gradient_error(const FusionInstance& inst, double l2, double h = 1e-5) {
  FusionModel grad;
  fusion_objective(inst.systems, inst.labels, inst.model, l2, &grad);
  auto fd = [&](auto&& bump) {
    FusionModel plus = inst.model, minus = inst.model;
    bump(plus, h);
    bump(minus, -h);
    return (fusion_objective(inst.systems, inst.labels, plus, l2) -
            fusion_objective(inst.systems, inst.labels, minus, l2)) /
           (2.0 * h);
  };
  double worst = 0.0;
  auto compare = [&](double analytic, double numeric) {
    worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric)));
  };
  for (std::size_t k = 0; k < inst.model.num_systems(); ++k)
    compare(grad.system_scales[k],
            fd([k](FusionModel& m, double e) { m.system_scales[k] += e; }));
  for (std::size_t c = 0; c < inst.model.num_classes(); ++c)
    compare(grad.class_offsets[c],
            fd([c](FusionModel& m, double e) { m.class_offsets[c] += e; }));
  return worst;
}

}  // namespace mediatopic::testing
