#pragma once

// Latent Dirichlet Allocation over weighted documents.
//
// Per-document inference is mean-field coordinate ascent on q(theta|gamma)
// prod q(z|phi); type masses stand in for token counts, so a type with mass
// m_v contributes like m_v tokens sharing one phi row. Training alternates
// that E-step with a smoothed M-step on the topic-word matrix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/archive.hpp"
#include "mediatopic/errors.hpp"
#include "mediatopic/matrix.hpp"
#include "mediatopic/numeric.hpp"
#include "mediatopic/parallel.hpp"
#include "mediatopic/random.hpp"
#include "mediatopic/weighting.hpp"

namespace mediatopic {

struct LdaModel {
  double alpha = 1.0;  // symmetric Dirichlet concentration
  Matrix log_beta;     // K x V, rows are log topic-word distributions

  std::size_t num_topics() const { return log_beta.rows(); }
  std::size_t vocabulary_size() const { return log_beta.cols(); }

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("LDA alpha must be > 0");
    if (num_topics() == 0 || vocabulary_size() == 0)
      throw ValidationError("LDA model has an empty topic-word matrix");
    for (std::size_t k = 0; k < num_topics(); ++k) {
      double total = 0.0;
      for (double lb : log_beta.row(k)) {
        if (!std::isfinite(lb)) throw ValidationError("LDA topic-word entry is not finite");
        total += std::exp(lb);
      }
      if (std::abs(total - 1.0) > 1e-10)
        throw ValidationError(fmt::format("LDA topic {} does not sum to 1", k));
    }
  }
  bool operator==(const LdaModel&) const = default;
};

struct LdaInferenceConfig {
  std::size_t max_iterations = 100;
  double gamma_tolerance = 1e-5;  // mean absolute change in gamma
  bool record_trace = false;
};

struct LdaTrainConfig {
  std::size_t max_em_iterations = 50;
  double relative_tolerance = 1e-4;
  double smoothing = 0.01;            // pseudo-mass per (topic, type)
  std::optional<double> alpha;        // default 1/K
  std::size_t init_subset_size = 1;   // documents averaged to seed each topic
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  LdaInferenceConfig inference;
};

struct VariationalState {
  std::vector<double> gamma;  // K
  Matrix phi;                 // one K-simplex row per document entry
  double elbo = 0.0;
  std::size_t iterations = 0;
  std::vector<double> elbo_trace;  // after each phi/gamma round, when requested
};

// One variational EM iteration. `objective` adds the smoothing prior
// smoothing * sum log beta to the corpus ELBO; that sum is what the smoothed
// M-step maximizes, so it is the quantity that never decreases.
struct LdaTrainRecord {
  std::size_t iteration = 0;
  double elbo = 0.0;
  double objective = 0.0;
};

namespace detail {

inline void check_document(const LdaModel& model, const WeightedDocument& doc) {
  if (!(doc.total_mass > 0.0)) throw ArgumentError("document has zero total mass");
  for (const auto& e : doc.entries) {
    if (e.type >= model.vocabulary_size())
      throw DimensionError(fmt::format("type {} outside LDA vocabulary of size {}", e.type,
                                       model.vocabulary_size()));
    if (!(e.mass >= 0.0) || !std::isfinite(e.mass))
      throw ArgumentError("document mass must be finite and >= 0");
  }
}

}  // namespace detail

// Evidence lower bound E_q[log p(theta, z, d | alpha, beta)] - E_q[log q].
inline double elbo(const LdaModel& model, const WeightedDocument& doc,
                   const VariationalState& state) {
  const std::size_t k_topics = model.num_topics();
  if (state.gamma.size() != k_topics || state.phi.rows() != doc.entries.size() ||
      state.phi.cols() != k_topics)
    throw DimensionError("variational state does not match the model and document");
  const double alpha = model.alpha;
  const double gamma_sum = std::accumulate(state.gamma.begin(), state.gamma.end(), 0.0);
  const double psi_sum = digamma(gamma_sum);
  std::vector<double> e_log_theta(k_topics);
  for (std::size_t k = 0; k < k_topics; ++k) e_log_theta[k] = digamma(state.gamma[k]) - psi_sum;

  double value = log_gamma(k_topics * alpha) - k_topics * log_gamma(alpha) - log_gamma(gamma_sum);
  for (std::size_t k = 0; k < k_topics; ++k)
    value += (alpha - state.gamma[k]) * e_log_theta[k] + log_gamma(state.gamma[k]);
  for (std::size_t i = 0; i < doc.entries.size(); ++i) {
    const auto& e = doc.entries[i];
    const auto phi = state.phi.row(i);
    double term = 0.0;
    for (std::size_t k = 0; k < k_topics; ++k) {
      if (phi[k] <= 0.0) continue;
      term += phi[k] * (e_log_theta[k] + model.log_beta(k, e.type) - std::log(phi[k]));
    }
    value += e.mass * term;
  }
  return value;
}

// Coordinate ascent: phi_vk ∝ beta_kv exp(psi(gamma_k)), then
// gamma_k = alpha + sum_v m_v phi_vk, until the mean |Δgamma| falls below the
// tolerance. `warm_gamma` replaces the default start alpha + mass/K.
inline VariationalState infer_document(const LdaModel& model, const WeightedDocument& doc,
                                       const LdaInferenceConfig& config = {},
                                       std::span<const double> warm_gamma = {}) {
  detail::check_document(model, doc);
  const std::size_t k_topics = model.num_topics();
  VariationalState state;
  if (!warm_gamma.empty()) {
    if (warm_gamma.size() != k_topics) throw DimensionError("warm-start gamma has wrong length");
    state.gamma.assign(warm_gamma.begin(), warm_gamma.end());
  } else {
    state.gamma.assign(k_topics, model.alpha + doc.total_mass / static_cast<double>(k_topics));
  }
  state.phi = Matrix(doc.entries.size(), k_topics);

  std::vector<double> psi(k_topics);
  std::vector<double> next(k_topics);
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    for (std::size_t k = 0; k < k_topics; ++k) psi[k] = digamma(state.gamma[k]);
    std::fill(next.begin(), next.end(), model.alpha);
    for (std::size_t i = 0; i < doc.entries.size(); ++i) {
      const auto& e = doc.entries[i];
      auto phi = state.phi.row(i);
      for (std::size_t k = 0; k < k_topics; ++k) phi[k] = model.log_beta(k, e.type) + psi[k];
      const double norm = log_sum_exp(phi);
      for (std::size_t k = 0; k < k_topics; ++k) {
        phi[k] = std::exp(phi[k] - norm);
        next[k] += e.mass * phi[k];
      }
    }
    double change = 0.0;
    for (std::size_t k = 0; k < k_topics; ++k) change += std::abs(next[k] - state.gamma[k]);
    change /= static_cast<double>(k_topics);
    state.gamma.swap(next);
    state.iterations = it + 1;
    if (config.record_trace) state.elbo_trace.push_back(elbo(model, doc, state));
    if (change < config.gamma_tolerance) break;
  }
  state.elbo = elbo(model, doc, state);
  return state;
}

// Exact log p(d | alpha, beta) by summing over all K^T topic assignments.
// The document's masses must be integer token counts.
inline double log_evidence_bruteforce(const LdaModel& model, const WeightedDocument& doc) {
  const std::size_t k_topics = model.num_topics();
  std::vector<std::uint32_t> tokens;
  for (const auto& e : doc.entries) {
    if (e.type >= model.vocabulary_size())
      throw DimensionError(fmt::format("type {} outside LDA vocabulary", e.type));
    const double count = std::round(e.mass);
    if (std::abs(e.mass - count) > 1e-9 || count < 0.0)
      throw ArgumentError("brute-force evidence needs integer token counts");
    for (int c = 0; c < static_cast<int>(count); ++c) tokens.push_back(e.type);
  }
  const std::size_t length = tokens.size();
  if (length == 0) throw ArgumentError("brute-force evidence needs at least one token");
  double assignments = 1.0;
  for (std::size_t t = 0; t < length; ++t) assignments *= static_cast<double>(k_topics);
  if (assignments > 1e6)
    throw ArgumentError(fmt::format("instance too large for enumeration: K^T = {}", assignments));

  const double alpha = model.alpha;
  const double log_norm = log_gamma(k_topics * alpha) - log_gamma(k_topics * alpha + length) -
                          k_topics * log_gamma(alpha);
  std::vector<std::size_t> z(length, 0);
  std::vector<std::size_t> counts(k_topics, 0);
  LogSumExp total;
  while (true) {
    std::fill(counts.begin(), counts.end(), 0);
    double term = log_norm;
    for (std::size_t t = 0; t < length; ++t) {
      ++counts[z[t]];
      term += model.log_beta(z[t], tokens[t]);
    }
    for (std::size_t k = 0; k < k_topics; ++k) term += log_gamma(alpha + counts[k]);
    total.add(term);
    std::size_t pos = 0;
    while (pos < length && ++z[pos] == k_topics) z[pos++] = 0;
    if (pos == length) break;
  }
  return total.value();
}

namespace detail {

inline void normalize_rows_into_log(const Matrix& mass, Matrix& log_beta) {
  log_beta = Matrix(mass.rows(), mass.cols());
  for (std::size_t k = 0; k < mass.rows(); ++k) {
    const auto row = mass.row(k);
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    const double log_total = std::log(total);
    for (std::size_t v = 0; v < mass.cols(); ++v) log_beta(k, v) = std::log(row[v]) - log_total;
  }
}

}  // namespace detail

inline LdaModel train_lda(std::span<const WeightedDocument> docs, std::size_t num_topics,
                          std::size_t vocabulary_size, const LdaTrainConfig& config = {},
                          std::vector<LdaTrainRecord>* trace = nullptr) {
  if (num_topics < 1) throw ArgumentError("LDA needs K >= 1");
  if (docs.empty()) throw ArgumentError("LDA training corpus is empty");
  if (vocabulary_size == 0) throw ArgumentError("LDA vocabulary is empty");
  if (!(config.smoothing > 0.0)) throw ArgumentError("LDA smoothing must be > 0");
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (!(docs[d].total_mass > 0.0))
      throw ArgumentError(fmt::format("document {} has zero total mass", d));
    for (const auto& e : docs[d].entries)
      if (e.type >= vocabulary_size)
        throw ArgumentError(fmt::format("document {} has type {} outside vocabulary", d, e.type));
  }

  LdaModel model;
  model.alpha = config.alpha.value_or(1.0 / static_cast<double>(num_topics));
  if (!(model.alpha > 0.0)) throw ArgumentError("LDA alpha must be > 0");

  // Seed each topic from the mean masses of a random document subset.
  {
    Rng rng = make_rng(config.seed, "lda-init");
    Matrix seed_mass(num_topics, vocabulary_size, config.smoothing);
    const std::size_t subset = std::clamp<std::size_t>(config.init_subset_size, 1, docs.size());
    std::vector<std::size_t> order(docs.size());
    for (std::size_t k = 0; k < num_topics; ++k) {
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = 0; i < subset; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, docs.size() - 1);
        std::swap(order[i], order[pick(rng)]);
        for (const auto& e : docs[order[i]].entries)
          seed_mass(k, e.type) += e.mass / static_cast<double>(subset);
      }
    }
    detail::normalize_rows_into_log(seed_mass, model.log_beta);
  }

  std::vector<std::vector<double>> gammas(docs.size());
  std::vector<VariationalState> states(docs.size());
  double previous = 0.0;
  for (std::size_t it = 0; it < config.max_em_iterations; ++it) {
    parallel_for(docs.size(), config.threads, [&](std::size_t d) {
      states[d] = infer_document(model, docs[d], config.inference, gammas[d]);
    });
    Matrix suff(num_topics, vocabulary_size, config.smoothing);
    double corpus_elbo = 0.0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      corpus_elbo += states[d].elbo;
      gammas[d] = states[d].gamma;
      const auto& entries = docs[d].entries;
      for (std::size_t i = 0; i < entries.size(); ++i)
        for (std::size_t k = 0; k < num_topics; ++k)
          suff(k, entries[i].type) += entries[i].mass * states[d].phi(i, k);
    }
    double prior = 0.0;
    for (double lb : model.log_beta.data()) prior += lb;
    const double objective = corpus_elbo + config.smoothing * prior;
    if (trace) trace->push_back({it, corpus_elbo, objective});

    detail::normalize_rows_into_log(suff, model.log_beta);
    if (it > 0 && std::abs(objective - previous) < config.relative_tolerance * std::abs(previous))
      break;
    previous = objective;
  }
  model.validate();
  return model;
}

template <>
struct ModelTraits<LdaModel> {
  static constexpr ModelType type = ModelType::lda;
  static constexpr std::string_view name = "LdaModel";
  static void write(ByteWriter& w, const LdaModel& m) {
    w.put_f64(m.alpha);
    w.put_matrix(m.log_beta);
  }
  static LdaModel read(ByteReader& r) {
    LdaModel m;
    m.alpha = r.get_f64();
    m.log_beta = r.get_matrix();
    m.validate();
    return m;
  }
};

}  // namespace mediatopic
