#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "mediatopic/errors.hpp"

namespace mediatopic {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Mixes a stage name into the run seed so every stage draws an independent
// stream from the one configured seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : salt) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

inline Rng make_rng(std::uint64_t seed, std::string_view salt) {
  return Rng(derive_seed(seed, salt));
}

// Draw from Dirichlet(alpha). Zero entries of alpha yield exact zeros.
inline std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> alpha) {
  std::vector<double> draw(alpha.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] < 0.0) throw ArgumentError("Dirichlet parameter must be >= 0");
    if (alpha[i] == 0.0) continue;
    std::gamma_distribution<double> gamma(alpha[i], 1.0);
    draw[i] = gamma(rng);
    total += draw[i];
  }
  if (!(total > 0.0)) {
    // Every gamma draw underflowed (tiny concentrations): fall back to the
    // largest parameter.
    std::size_t best = 0;
    for (std::size_t i = 1; i < alpha.size(); ++i)
      if (alpha[i] > alpha[best]) best = i;
    if (alpha.empty() || alpha[best] == 0.0)
      throw ArgumentError("Dirichlet parameters are all zero");
    draw[best] = 1.0;
    return draw;
  }
  for (double& d : draw) d /= total;
  return draw;
}

template <class Weights>
std::size_t sample_categorical(Rng& rng, const Weights& weights) {
  std::discrete_distribution<std::size_t> dist(std::begin(weights), std::end(weights));
  return dist(rng);
}

}  // namespace mediatopic
