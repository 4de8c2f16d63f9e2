#pragma once

// Fixed-length show features: a show-level posterior, or segment posteriors
// pooled by length, optionally followed by channel and broadcast-time one-hots.

#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/errors.hpp"
#include "mediatopic/numeric.hpp"

namespace mediatopic {

inline constexpr std::size_t kChannelCount = 4;
inline constexpr std::size_t kTimeChunkCount = 8;
inline constexpr std::size_t kMetadataDim = kChannelCount + kTimeChunkCount;

enum class PoolingMode {
  whole,  // one posterior per show
  soft,   // segment posteriors normalized to the simplex, then pooled
  hard,   // segment posteriors replaced by their argmax one-hot, then pooled
};

inline std::string_view to_string(PoolingMode m) {
  switch (m) {
    case PoolingMode::whole: return "whole";
    case PoolingMode::soft: return "soft";
    case PoolingMode::hard: return "hard";
  }
  return "?";
}

inline PoolingMode parse_pooling_mode(std::string_view s) {
  if (s == "whole") return PoolingMode::whole;
  if (s == "soft") return PoolingMode::soft;
  if (s == "hard") return PoolingMode::hard;
  throw UsageError(fmt::format("featurize mode must be whole, soft or hard; got '{}'", s));
}

struct ShowFeature {
  std::string show_id;
  std::vector<double> values;
};

// x = sum_i len_i * v_i / sum_i len_i
inline std::vector<double> accumulate_segments(std::span<const std::vector<double>> vectors,
                                               std::span<const double> lengths) {
  if (vectors.empty()) throw ArgumentError("no segments to accumulate");
  if (vectors.size() != lengths.size())
    throw DimensionError("segment vector and length lists differ in size");
  const std::size_t dim = vectors.front().size();
  std::vector<double> out(dim, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (!(lengths[i] > 0.0)) throw ArgumentError("segment length must be positive");
    if (vectors[i].size() != dim) throw DimensionError("segment vectors differ in length");
    total += lengths[i];
    for (std::size_t k = 0; k < dim; ++k) out[k] += lengths[i] * vectors[i][k];
  }
  for (double& v : out) v /= total;
  return out;
}

inline std::vector<double> argmax_onehot(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("cannot one-hot an empty vector");
  std::vector<double> out(values.size(), 0.0);
  out[argmax(values)] = 1.0;
  return out;
}

// gamma / sum(gamma): the posterior mean of theta.
inline std::vector<double> normalize_to_simplex(std::span<const double> gamma) {
  const double total = std::accumulate(gamma.begin(), gamma.end(), 0.0);
  if (!(total > 0.0)) throw ArgumentError("cannot normalize a vector with non-positive sum");
  std::vector<double> out(gamma.begin(), gamma.end());
  for (double& v : out) v /= total;
  return out;
}

// Mode-dependent pooling of segment gammas. In whole mode exactly one vector
// is expected and it is only normalized.
inline std::vector<double> pool_segments(std::span<const std::vector<double>> gammas,
                                         std::span<const double> lengths, PoolingMode mode) {
  if (gammas.empty()) throw ArgumentError("no segments to pool");
  if (mode == PoolingMode::whole) {
    if (gammas.size() != 1)
      throw ArgumentError(
          fmt::format("whole-show mode expects one posterior per show, got {}", gammas.size()));
    return normalize_to_simplex(gammas.front());
  }
  std::vector<std::vector<double>> prepared;
  prepared.reserve(gammas.size());
  for (const auto& g : gammas)
    prepared.push_back(mode == PoolingMode::hard ? argmax_onehot(g) : normalize_to_simplex(g));
  return accumulate_segments(prepared, lengths);
}

inline std::size_t time_chunk(int broadcast_hour) {
  if (broadcast_hour < 0 || broadcast_hour > 23)
    throw ArgumentError(fmt::format("broadcast hour {} outside 0..23", broadcast_hour));
  return static_cast<std::size_t>(broadcast_hour / 3);
}

// [feature | channel one-hot (channel-1) | time-chunk one-hot]
inline std::vector<double> append_metadata(std::span<const double> feature, int channel,
                                           std::size_t chunk) {
  if (channel < 1 || channel > static_cast<int>(kChannelCount))
    throw ArgumentError(fmt::format("channel {} outside 1..4", channel));
  if (chunk >= kTimeChunkCount) throw ArgumentError(fmt::format("time chunk {} outside 0..7", chunk));
  std::vector<double> out(feature.begin(), feature.end());
  out.resize(feature.size() + kMetadataDim, 0.0);
  out[feature.size() + static_cast<std::size_t>(channel - 1)] = 1.0;
  out[feature.size() + kChannelCount + chunk] = 1.0;
  return out;
}

}  // namespace mediatopic
