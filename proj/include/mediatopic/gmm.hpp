#pragma once

// Diagonal-covariance GMM trained by EM with binary mix-up, and frame
// quantization into acoustic words (index of the most probable component).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/archive.hpp"
#include "mediatopic/corpus.hpp"
#include "mediatopic/errors.hpp"
#include "mediatopic/matrix.hpp"
#include "mediatopic/numeric.hpp"
#include "mediatopic/parallel.hpp"

namespace mediatopic {

struct GmmModel {
  std::vector<double> weights;
  Matrix means;      // N x F
  Matrix variances;  // N x F

  std::size_t num_components() const { return weights.size(); }
  std::size_t dim() const { return means.cols(); }

  void validate() const {
    const std::size_t n = weights.size();
    if (n == 0) throw ValidationError("GMM has no components");
    if (means.rows() != n || variances.rows() != n || variances.cols() != means.cols())
      throw ValidationError("GMM parameter shapes disagree");
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("GMM weight must be > 0");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-10) throw ValidationError("GMM weights do not sum to 1");
    for (double v : variances.data())
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("GMM variance must be > 0");
    for (double m : means.data())
      if (!std::isfinite(m)) throw ValidationError("GMM mean is not finite");
  }

  bool operator==(const GmmModel&) const = default;
};

struct GmmTrainConfig {
  std::size_t em_iterations = 10;       // per mix-up level
  double variance_floor_ratio = 1e-3;   // times the global per-dimension variance
  double min_variance_floor = 1e-6;     // used when the pool has zero variance
  double split_offset = 0.2;            // mean perturbation in standard deviations
  double empty_component_ratio = 1e-8;  // times the frame count
  std::size_t threads = 0;
};

// One EM iteration. `log_likelihood` is the pooled log-likelihood of the
// parameters entering the iteration; `floor_active` / `rescued` flag that
// those parameters came out of an M-step in which a variance was floored or
// an empty component was re-seeded (EM monotonicity does not apply then).
struct EmIterationRecord {
  std::size_t components = 0;
  std::size_t iteration = 0;
  double log_likelihood = 0.0;
  bool floor_active = false;
  bool rescued = false;
};

// Per-component constants for fast log-density evaluation.
class GmmScorer {
 public:
  explicit GmmScorer(const GmmModel& model) : model_(&model) {
    const std::size_t n = model.num_components();
    const std::size_t f = model.dim();
    log_const_.resize(n);
    inv_var_ = Matrix(n, f);
    for (std::size_t c = 0; c < n; ++c) {
      double acc = std::log(model.weights[c]);
      for (std::size_t d = 0; d < f; ++d) {
        const double v = model.variances(c, d);
        acc -= 0.5 * (kLog2Pi + std::log(v));
        inv_var_(c, d) = 1.0 / v;
      }
      log_const_[c] = acc;
    }
  }

  // log(w_n) + log N(frame; mu_n, Sigma_n) for every component.
  void log_joint(std::span<const double> frame, std::span<double> out) const {
    const std::size_t f = model_->dim();
    if (frame.size() != f)
      throw DimensionError(
          fmt::format("frame has dimension {}, model expects {}", frame.size(), f));
    for (std::size_t c = 0; c < log_const_.size(); ++c) {
      const auto mean = model_->means.row(c);
      const auto iv = inv_var_.row(c);
      double q = 0.0;
      for (std::size_t d = 0; d < f; ++d) {
        const double diff = frame[d] - mean[d];
        q += diff * diff * iv[d];
      }
      out[c] = log_const_[c] - 0.5 * q;
    }
  }

  std::size_t num_components() const { return log_const_.size(); }

 private:
  const GmmModel* model_;
  std::vector<double> log_const_;
  Matrix inv_var_;
};

inline std::vector<double> gmm_posteriors(const GmmModel& model, std::span<const double> frame) {
  GmmScorer scorer(model);
  std::vector<double> post(model.num_components());
  scorer.log_joint(frame, post);
  const double total = log_sum_exp(post);
  for (double& p : post) p = std::exp(p - total);
  return post;
}

inline double gmm_log_likelihood(const GmmModel& model, std::span<const double> frame) {
  GmmScorer scorer(model);
  std::vector<double> joint(model.num_components());
  scorer.log_joint(frame, joint);
  return log_sum_exp(joint);
}

// Sum of per-frame log-likelihoods of a frame matrix.
inline double gmm_total_log_likelihood(const GmmModel& model, const Matrix& frames) {
  if (frames.cols() != model.dim())
    throw DimensionError(fmt::format("document has dimension {}, model expects {}",
                                     frames.cols(), model.dim()));
  GmmScorer scorer(model);
  std::vector<double> joint(model.num_components());
  double total = 0.0;
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    scorer.log_joint(frames.row(t), joint);
    total += log_sum_exp(joint);
  }
  return total;
}

struct QuantizedDocument {
  std::vector<std::uint32_t> words;
  bool operator==(const QuantizedDocument&) const = default;
};

// Each frame becomes the index of its highest-posterior component. The
// posterior argmax equals the argmax of log w_n + log N_n, so normalization is
// skipped; ties go to the lowest index.
inline QuantizedDocument quantize_document(const GmmModel& model, const AcousticDocument& doc) {
  if (doc.dim() != model.dim())
    throw DimensionError(fmt::format("document has dimension {}, model expects {}", doc.dim(),
                                     model.dim()));
  GmmScorer scorer(model);
  std::vector<double> joint(model.num_components());
  QuantizedDocument out;
  out.words.reserve(doc.num_frames());
  for (std::size_t t = 0; t < doc.num_frames(); ++t) {
    scorer.log_joint(doc.frames.row(t), joint);
    out.words.push_back(static_cast<std::uint32_t>(argmax(joint)));
  }
  return out;
}

namespace detail {

// Sufficient statistics for one block of frames. Moments are centred on the
// current means to limit cancellation in the variance update.
struct EmStats {
  double log_likelihood = 0.0;
  std::vector<double> occupancy;
  Matrix first;   // sum_t r_tn (x_t - mu_n)
  Matrix second;  // sum_t r_tn (x_t - mu_n)^2

  EmStats(std::size_t n, std::size_t f) : occupancy(n, 0.0), first(n, f), second(n, f) {}

  void add(const EmStats& o) {
    log_likelihood += o.log_likelihood;
    for (std::size_t i = 0; i < occupancy.size(); ++i) occupancy[i] += o.occupancy[i];
    auto a = first.data();
    auto b = o.first.data();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    a = second.data();
    b = o.second.data();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  }
};

inline constexpr std::size_t kEmBlockSize = 2048;

inline EmStats accumulate_em_stats(const GmmModel& model, const Matrix& frames,
                                   std::size_t threads) {
  const std::size_t n = model.num_components();
  const std::size_t f = model.dim();
  const std::size_t blocks = (frames.rows() + kEmBlockSize - 1) / kEmBlockSize;
  GmmScorer scorer(model);
  std::vector<EmStats> partial(blocks, EmStats(n, f));
  parallel_for(blocks, threads, [&](std::size_t b) {
    EmStats& s = partial[b];
    std::vector<double> post(n);
    const std::size_t end = std::min(frames.rows(), (b + 1) * kEmBlockSize);
    for (std::size_t t = b * kEmBlockSize; t < end; ++t) {
      const auto x = frames.row(t);
      scorer.log_joint(x, post);
      const double ll = log_sum_exp(post);
      s.log_likelihood += ll;
      for (std::size_t c = 0; c < n; ++c) {
        const double r = std::exp(post[c] - ll);
        if (r == 0.0) continue;
        s.occupancy[c] += r;
        const auto mean = model.means.row(c);
        auto s1 = s.first.row(c);
        auto s2 = s.second.row(c);
        for (std::size_t d = 0; d < f; ++d) {
          const double diff = x[d] - mean[d];
          s1[d] += r * diff;
          s2[d] += r * diff * diff;
        }
      }
    }
  });
  EmStats total(n, f);
  for (const auto& s : partial) total.add(s);
  return total;
}

// Splits component `src` into itself and `dst` by shifting means by
// +/- offset standard deviations and halving the weight.
inline void split_component(GmmModel& m, std::size_t src, std::size_t dst, double offset) {
  m.weights[src] *= 0.5;
  m.weights[dst] = m.weights[src];
  for (std::size_t d = 0; d < m.dim(); ++d) {
    const double shift = offset * std::sqrt(m.variances(src, d));
    m.variances(dst, d) = m.variances(src, d);
    m.means(dst, d) = m.means(src, d) + shift;
    m.means(src, d) -= shift;
  }
}

struct MStepOutcome {
  bool floor_active = false;
  bool rescued = false;
};

inline MStepOutcome m_step(GmmModel& m, const EmStats& s, std::span<const double> floor,
                           std::size_t num_frames, const GmmTrainConfig& config) {
  const std::size_t n = m.num_components();
  const std::size_t f = m.dim();
  MStepOutcome out;
  std::vector<bool> empty(n, false);
  for (std::size_t c = 0; c < n; ++c) {
    const double occ = s.occupancy[c];
    if (occ < config.empty_component_ratio * static_cast<double>(num_frames)) {
      empty[c] = true;
      continue;
    }
    m.weights[c] = occ / static_cast<double>(num_frames);
    for (std::size_t d = 0; d < f; ++d) {
      const double shift = s.first(c, d) / occ;
      double var = s.second(c, d) / occ - shift * shift;
      m.means(c, d) += shift;
      if (var < floor[d]) {
        var = floor[d];
        out.floor_active = true;
      }
      m.variances(c, d) = var;
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (!empty[c]) continue;
    std::size_t heaviest = n;
    for (std::size_t h = 0; h < n; ++h)
      if (!empty[h] && (heaviest == n || m.weights[h] > m.weights[heaviest])) heaviest = h;
    if (heaviest == n) throw Error("GMM training collapsed: every component is empty");
    split_component(m, heaviest, c, config.split_offset);
    empty[c] = false;
    out.rescued = true;
  }
  const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
  for (double& w : m.weights) w /= total;
  return out;
}

}  // namespace detail

// Trains an N-component GMM on pooled frames: start from the global Gaussian,
// run EM, split every component in two, and repeat until N components.
inline GmmModel train_gmm(const Matrix& frames, std::size_t target_components,
                          const GmmTrainConfig& config = {},
                          std::vector<EmIterationRecord>* trace = nullptr) {
  const std::size_t m_frames = frames.rows();
  const std::size_t f = frames.cols();
  if (target_components == 0 || (target_components & (target_components - 1)) != 0)
    throw ArgumentError(
        fmt::format("component count must be a power of two, got {}", target_components));
  if (f == 0) throw ArgumentError("frames have zero dimension");
  if (m_frames < target_components)
    throw ArgumentError(fmt::format("need at least {} frames to train {} components, got {}",
                                    target_components, target_components, m_frames));
  for (double v : frames.data())
    if (!std::isfinite(v)) throw ArgumentError("training frames contain non-finite values");

  GmmModel model;
  model.weights = {1.0};
  model.means = Matrix(1, f);
  model.variances = Matrix(1, f);
  std::vector<double> floor(f);
  for (std::size_t d = 0; d < f; ++d) {
    double mean = 0.0;
    for (std::size_t t = 0; t < m_frames; ++t) mean += frames(t, d);
    mean /= static_cast<double>(m_frames);
    double var = 0.0;
    for (std::size_t t = 0; t < m_frames; ++t) var += (frames(t, d) - mean) * (frames(t, d) - mean);
    var /= static_cast<double>(m_frames);
    floor[d] = std::max(config.variance_floor_ratio * var, config.min_variance_floor);
    model.means(0, d) = mean;
    model.variances(0, d) = std::max(var, floor[d]);
  }

  auto run_level = [&] {
    detail::MStepOutcome last;
    for (std::size_t it = 0; it < config.em_iterations; ++it) {
      const detail::EmStats stats = detail::accumulate_em_stats(model, frames, config.threads);
      if (trace)
        trace->push_back({model.num_components(), it, stats.log_likelihood, last.floor_active,
                          last.rescued});
      last = detail::m_step(model, stats, floor, m_frames, config);
    }
  };

  run_level();
  while (model.num_components() < target_components) {
    const std::size_t n = model.num_components();
    GmmModel grown;
    grown.weights.assign(2 * n, 0.0);
    grown.means = Matrix(2 * n, f);
    grown.variances = Matrix(2 * n, f);
    for (std::size_t c = 0; c < n; ++c) {
      grown.weights[c] = model.weights[c];
      for (std::size_t d = 0; d < f; ++d) {
        grown.means(c, d) = model.means(c, d);
        grown.variances(c, d) = model.variances(c, d);
      }
      detail::split_component(grown, c, c + n, config.split_offset);
    }
    model = std::move(grown);
    run_level();
  }
  model.validate();
  return model;
}

template <>
struct ModelTraits<GmmModel> {
  static constexpr ModelType type = ModelType::gmm;
  static constexpr std::string_view name = "GmmModel";
  static void write(ByteWriter& w, const GmmModel& m) {
    w.put_f64s(m.weights);
    w.put_matrix(m.means);
    w.put_matrix(m.variances);
  }
  static GmmModel read(ByteReader& r) {
    GmmModel m;
    m.weights = r.get_f64s();
    m.means = r.get_matrix();
    m.variances = r.get_matrix();
    m.validate();
    return m;
  }
};

}  // namespace mediatopic
