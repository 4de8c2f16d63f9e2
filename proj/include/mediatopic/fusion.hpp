#pragma once

// Linear score fusion trained by multiclass logistic regression:
//   fused_n = sum_k scale_k * S_k[n] + offset
// with scale_k one scalar per system and offset one value per class, chosen
// to maximize sum_n log softmax(fused_n)[y_n] (minus a small L2 penalty).

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/archive.hpp"
#include "mediatopic/errors.hpp"
#include "mediatopic/matrix.hpp"
#include "mediatopic/numeric.hpp"

namespace mediatopic {

struct FusionModel {
  std::vector<double> system_scales;
  std::vector<double> class_offsets;

  std::size_t num_systems() const { return system_scales.size(); }
  std::size_t num_classes() const { return class_offsets.size(); }

  void validate() const {
    for (double v : system_scales)
      if (!std::isfinite(v)) throw ValidationError("fusion scale is not finite");
    for (double v : class_offsets)
      if (!std::isfinite(v)) throw ValidationError("fusion offset is not finite");
  }
  bool operator==(const FusionModel&) const = default;
};

struct FusionTrainConfig {
  std::size_t max_iterations = 1000;
  double gradient_tolerance = 1e-6;  // max-norm of the gradient
  double l2_penalty = 1e-6;
  double initial_scale = 1.0;
};

struct FusionTrainRecord {
  std::size_t iteration = 0;
  double objective = 0.0;
  double step = 0.0;
};

namespace detail {

inline void check_score_sets(std::span<const Matrix> score_sets, std::size_t num_labels) {
  if (score_sets.empty()) throw ArgumentError("fusion needs at least one system");
  const std::size_t rows = score_sets.front().rows();
  const std::size_t cols = score_sets.front().cols();
  for (const auto& s : score_sets)
    if (s.rows() != rows || s.cols() != cols)
      throw DimensionError("fusion score matrices differ in shape");
  if (rows != num_labels) throw DimensionError("fusion label count differs from score rows");
}

}  // namespace detail

// Penalized log-likelihood; fills `gradient` (same shape as the model) when
// non-null.
inline double fusion_objective(std::span<const Matrix> score_sets,
                               std::span<const std::size_t> labels, const FusionModel& model,
                               double l2_penalty, FusionModel* gradient = nullptr) {
  detail::check_score_sets(score_sets, labels.size());
  const std::size_t n_systems = score_sets.size();
  const std::size_t n_classes = score_sets.front().cols();
  if (model.num_systems() != n_systems || model.num_classes() != n_classes)
    throw DimensionError("fusion model does not match the score matrices");
  if (gradient) {
    gradient->system_scales.assign(n_systems, 0.0);
    gradient->class_offsets.assign(n_classes, 0.0);
  }
  std::vector<double> fused(n_classes);
  double value = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const std::size_t y = labels[n];
    if (y >= n_classes) throw ArgumentError(fmt::format("label {} outside {} classes", y, n_classes));
    for (std::size_t c = 0; c < n_classes; ++c) {
      double f = model.class_offsets[c];
      for (std::size_t k = 0; k < n_systems; ++k) f += model.system_scales[k] * score_sets[k](n, c);
      fused[c] = f;
    }
    const double norm = log_sum_exp(fused);
    value += fused[y] - norm;
    if (!gradient) continue;
    for (std::size_t c = 0; c < n_classes; ++c) {
      const double p = std::exp(fused[c] - norm);
      const double residual = (c == y ? 1.0 : 0.0) - p;
      gradient->class_offsets[c] += residual;
      for (std::size_t k = 0; k < n_systems; ++k)
        gradient->system_scales[k] += residual * score_sets[k](n, c);
    }
  }
  double norm2 = 0.0;
  for (double v : model.system_scales) norm2 += v * v;
  for (double v : model.class_offsets) norm2 += v * v;
  value -= 0.5 * l2_penalty * norm2;
  if (gradient) {
    for (std::size_t k = 0; k < n_systems; ++k)
      gradient->system_scales[k] -= l2_penalty * model.system_scales[k];
    for (std::size_t c = 0; c < n_classes; ++c)
      gradient->class_offsets[c] -= l2_penalty * model.class_offsets[c];
  }
  return value;
}

// Gradient ascent with Armijo backtracking.
inline FusionModel train_fusion(std::span<const Matrix> score_sets,
                                std::span<const std::size_t> labels,
                                const FusionTrainConfig& config = {},
                                std::vector<FusionTrainRecord>* trace = nullptr) {
  detail::check_score_sets(score_sets, labels.size());
  if (std::set<std::size_t>(labels.begin(), labels.end()).size() < 2)
    throw ArgumentError("fusion training needs at least two classes");
  const std::size_t n_classes = score_sets.front().cols();
  if (n_classes < 2) throw ArgumentError("fusion needs at least two classes");

  FusionModel model;
  model.system_scales.assign(score_sets.size(), config.initial_scale);
  model.class_offsets.assign(n_classes, 0.0);
  FusionModel grad;
  double value = fusion_objective(score_sets, labels, model, config.l2_penalty, &grad);
  if (trace) trace->push_back({0, value, 0.0});

  auto max_norm = [](const FusionModel& g) {
    double m = 0.0;
    for (double v : g.system_scales) m = std::max(m, std::abs(v));
    for (double v : g.class_offsets) m = std::max(m, std::abs(v));
    return m;
  };
  auto squared_norm = [](const FusionModel& g) {
    double s = 0.0;
    for (double v : g.system_scales) s += v * v;
    for (double v : g.class_offsets) s += v * v;
    return s;
  };

  double step = 1.0 / static_cast<double>(labels.size());
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    if (max_norm(grad) < config.gradient_tolerance) break;
    const double g2 = squared_norm(grad);
    bool accepted = false;
    for (int attempt = 0; attempt < 80; ++attempt) {
      FusionModel candidate = model;
      for (std::size_t k = 0; k < candidate.system_scales.size(); ++k)
        candidate.system_scales[k] += step * grad.system_scales[k];
      for (std::size_t c = 0; c < n_classes; ++c)
        candidate.class_offsets[c] += step * grad.class_offsets[c];
      FusionModel candidate_grad;
      const double candidate_value =
          fusion_objective(score_sets, labels, candidate, config.l2_penalty, &candidate_grad);
      if (std::isfinite(candidate_value) && candidate_value >= value + 1e-4 * step * g2) {
        model = std::move(candidate);
        grad = std::move(candidate_grad);
        value = candidate_value;
        if (trace) trace->push_back({it, value, step});
        step *= 2.0;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  model.validate();
  return model;
}

// sum_k scale_k * rows[k] + offset
inline std::vector<double> fuse_scores(const FusionModel& model,
                                       std::span<const std::vector<double>> system_rows) {
  if (system_rows.size() != model.num_systems())
    throw DimensionError(fmt::format("fusion model expects {} systems, got {}",
                                     model.num_systems(), system_rows.size()));
  std::vector<double> fused = model.class_offsets;
  for (std::size_t k = 0; k < system_rows.size(); ++k) {
    if (system_rows[k].size() != fused.size())
      throw DimensionError("system score row has the wrong number of classes");
    for (std::size_t c = 0; c < fused.size(); ++c)
      fused[c] += model.system_scales[k] * system_rows[k][c];
  }
  return fused;
}

template <>
struct ModelTraits<FusionModel> {
  static constexpr ModelType type = ModelType::fusion;
  static constexpr std::string_view name = "FusionModel";
  static void write(ByteWriter& w, const FusionModel& m) {
    w.put_f64s(m.system_scales);
    w.put_f64s(m.class_offsets);
  }
  static FusionModel read(ByteReader& r) {
    FusionModel m;
    m.system_scales = r.get_f64s();
    m.class_offsets = r.get_f64s();
    m.validate();
    return m;
  }
};

}  // namespace mediatopic
