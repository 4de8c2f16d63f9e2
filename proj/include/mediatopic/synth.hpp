#pragma once

// Synthetic corpora sampled from an LDA-style generative process.
//
// Topic k belongs to genre k mod G and owns a disjoint block of acoustic words
// and a disjoint block of text words. A show draws its topic mixture from its
// genre's Dirichlet; each episode and then each segment perturbs that mixture
// through further Dirichlet draws. Every token picks a topic, an acoustic word
// and a text word; the acoustic word emits frames from its own Gaussian.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/corpus.hpp"
#include "mediatopic/errors.hpp"
#include "mediatopic/featurize.hpp"
#include "mediatopic/random.hpp"
#include "mediatopic/tsv.hpp"

namespace mediatopic {

struct SynthSpec {
  std::size_t genres = 4;
  std::size_t shows = 12;
  std::size_t episodes_per_show = 3;
  std::size_t test_episodes_per_show = 1;
  std::size_t topics = 8;
  std::size_t acoustic_vocab = 200;
  std::size_t text_vocab = 400;
  std::size_t feature_dim = 8;
  std::size_t segments_per_show = 20;
  std::size_t tokens_per_segment = 50;
  std::size_t frames_per_token = 1;
  double emitter_spread = 10.0;       // emitter means uniform in [-spread, spread]^F
  double acoustic_overlap = 1.0;      // emitter standard deviation
  double genre_concentration = 1.0;   // show mixture ~ Dir(genre prior)
  double topic_leak = 0.0;            // genre prior mass on other genres' topics, relative
  double show_concentration = 20.0;   // episode mixture ~ Dir(c * show mixture)
  double segment_concentration = 5.0; // segment mixture ~ Dir(c * episode mixture)
  double word_concentration = 1.0;    // topic word distributions over their block
  double metadata_mass = 0.8;         // probability of the genre's dominant channel / hours
  double frame_period_ms = 10.0;
  std::uint64_t seed = 1;

  void validate() const {
    auto fail = [](std::string_view what) { throw ArgumentError("invalid synth spec: " + std::string(what)); };
    if (genres < 1) fail("genres must be >= 1");
    if (shows < genres) fail("need at least one show per genre");
    if (episodes_per_show < 1) fail("episodes_per_show must be >= 1");
    if (test_episodes_per_show >= episodes_per_show)
      fail("test_episodes_per_show must leave at least one training episode");
    if (topics < genres) fail("need at least one topic per genre");
    if (acoustic_vocab < topics || text_vocab < topics) fail("vocabularies must be >= topics");
    if (feature_dim < 1 || segments_per_show < 1 || tokens_per_segment < 1 || frames_per_token < 1)
      fail("sizes must be >= 1");
    if (!(emitter_spread >= 0.0) || !(acoustic_overlap > 0.0)) fail("emitter parameters");
    if (!(genre_concentration > 0.0) || !(show_concentration > 0.0) ||
        !(segment_concentration > 0.0) || !(word_concentration > 0.0))
      fail("concentrations must be > 0");
    if (!(topic_leak >= 0.0)) fail("topic_leak must be >= 0");
    if (!(metadata_mass >= 0.0 && metadata_mass <= 1.0)) fail("metadata_mass must lie in [0, 1]");
  }
};

inline SynthSpec load_synth_spec(const std::filesystem::path& path) {
  SynthSpec s;
  for (const auto& [key, value] : read_key_values(path)) {
    const std::string where = path.string() + ": " + key;
    auto size = [&] { return parse_index(value, where); };
    auto real = [&] { return parse_double(value, where); };
    if (key == "genres") s.genres = size();
    else if (key == "shows") s.shows = size();
    else if (key == "episodes_per_show") s.episodes_per_show = size();
    else if (key == "test_episodes_per_show") s.test_episodes_per_show = size();
    else if (key == "topics") s.topics = size();
    else if (key == "acoustic_vocab") s.acoustic_vocab = size();
    else if (key == "text_vocab") s.text_vocab = size();
    else if (key == "feature_dim") s.feature_dim = size();
    else if (key == "segments_per_show") s.segments_per_show = size();
    else if (key == "tokens_per_segment") s.tokens_per_segment = size();
    else if (key == "frames_per_token") s.frames_per_token = size();
    else if (key == "emitter_spread") s.emitter_spread = real();
    else if (key == "acoustic_overlap") s.acoustic_overlap = real();
    else if (key == "genre_concentration") s.genre_concentration = real();
    else if (key == "topic_leak") s.topic_leak = real();
    else if (key == "show_concentration") s.show_concentration = real();
    else if (key == "segment_concentration") s.segment_concentration = real();
    else if (key == "word_concentration") s.word_concentration = real();
    else if (key == "metadata_mass") s.metadata_mass = real();
    else if (key == "frame_period_ms") s.frame_period_ms = real();
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_index(value, where));
    else throw UsageError(fmt::format("{}: unknown synth spec key '{}'", path.string(), key));
  }
  s.validate();
  return s;
}

// Distributions materialized from a spec.
struct SynthModel {
  std::vector<std::vector<double>> genre_priors;     // G x K*
  std::vector<std::vector<double>> acoustic_topics;  // K* x V
  std::vector<std::vector<double>> text_topics;      // K* x V_text
  Matrix emitter_means;                              // V x F
  std::vector<std::size_t> show_genre;               // S
  std::vector<std::vector<double>> show_mixtures;    // S x K*
  std::vector<int> dominant_channel;                 // G, 1..4
  std::vector<std::size_t> dominant_chunk;           // G, 0..7
};

inline std::string synth_genre_name(std::size_t g, std::size_t genres) {
  static const char* kNames[] = {"advice", "childrens", "comedy", "competition",
                                 "documentary", "drama", "events", "news"};
  return genres <= 8 ? kNames[g] : fmt::format("genre{:02}", g);
}

inline SynthModel build_synth_model(const SynthSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, "synth-model");
  SynthModel m;
  const std::size_t k_star = spec.topics;
  for (std::size_t g = 0; g < spec.genres; ++g) {
    std::vector<double> prior(k_star);
    for (std::size_t k = 0; k < k_star; ++k)
      prior[k] = spec.genre_concentration * (k % spec.genres == g ? 1.0 : spec.topic_leak);
    m.genre_priors.push_back(std::move(prior));
    m.dominant_channel.push_back(static_cast<int>(g % kChannelCount) + 1);
    m.dominant_chunk.push_back((g * kTimeChunkCount / spec.genres) % kTimeChunkCount);
  }
  auto block_topics = [&](std::size_t vocab) {
    std::vector<std::vector<double>> topics;
    for (std::size_t k = 0; k < k_star; ++k) {
      const std::size_t begin = k * vocab / k_star;
      const std::size_t end = (k + 1) * vocab / k_star;
      std::vector<double> alpha(vocab, 0.0);
      for (std::size_t v = begin; v < end; ++v) alpha[v] = spec.word_concentration;
      topics.push_back(sample_dirichlet(rng, alpha));
    }
    return topics;
  };
  m.acoustic_topics = block_topics(spec.acoustic_vocab);
  m.text_topics = block_topics(spec.text_vocab);
  m.emitter_means = Matrix(spec.acoustic_vocab, spec.feature_dim);
  std::uniform_real_distribution<double> uniform(-spec.emitter_spread, spec.emitter_spread);
  for (double& v : m.emitter_means.data()) v = uniform(rng);
  for (std::size_t s = 0; s < spec.shows; ++s) {
    const std::size_t g = s % spec.genres;
    m.show_genre.push_back(g);
    m.show_mixtures.push_back(sample_dirichlet(rng, m.genre_priors[g]));
  }
  return m;
}

namespace detail {

inline std::vector<double> scaled(std::span<const double> v, double c) {
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x *= c;
  return out;
}

inline int draw_channel(Rng& rng, int dominant, double mass) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < mass) return dominant;
  std::uniform_int_distribution<int> other(0, static_cast<int>(kChannelCount) - 2);
  const int pick = other(rng) + 1;
  return pick >= dominant ? pick + 1 : pick;
}

inline int draw_hour(Rng& rng, std::size_t dominant_chunk, double mass) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int first = static_cast<int>(dominant_chunk) * 3;
  if (u(rng) < mass) return first + std::uniform_int_distribution<int>(0, 2)(rng);
  const int pick = std::uniform_int_distribution<int>(0, 20)(rng);
  return pick >= first ? pick + 3 : pick;
}

}  // namespace detail

// Writes a complete corpus under `out_dir` and returns the manifest path.
// Output is a pure function of the synth spec, seed included.
inline std::filesystem::path generate_synthetic_corpus(const SynthSpec& spec,
                                                       const std::filesystem::path& out_dir) {
  const SynthModel model = build_synth_model(spec);
  std::filesystem::create_directories(out_dir);

  CorpusManifest manifest;
  manifest.root = out_dir;
  manifest.feature_dim = spec.feature_dim;
  manifest.frame_period_ms = spec.frame_period_ms;
  manifest.vocabulary_size_hint = spec.acoustic_vocab;
  for (std::size_t g = 0; g < spec.genres; ++g)
    manifest.genre_names.push_back(synth_genre_name(g, spec.genres));
  for (std::size_t s = 0; s < spec.shows; ++s) {
    manifest.show_names.push_back(
        fmt::format("{}_show{:02}", manifest.genre_names[model.show_genre[s]], s));
    manifest.show_to_genre.push_back(model.show_genre[s]);
  }

  std::vector<ShowRecord> records;
  std::normal_distribution<double> noise(0.0, spec.acoustic_overlap);
  const std::size_t lo = std::max<std::size_t>(1, (spec.tokens_per_segment + 1) / 2);
  const std::size_t hi = std::max(lo, spec.tokens_per_segment * 3 / 2);
  for (std::size_t s = 0; s < spec.shows; ++s) {
    const std::size_t g = model.show_genre[s];
    for (std::size_t e = 0; e < spec.episodes_per_show; ++e) {
      ShowRecord rec;
      rec.show_id = fmt::format("ep{:03}_{:02}", s, e);
      Rng rng = make_rng(spec.seed, "synth-episode-" + rec.show_id);
      rec.genre_label = g;
      rec.show_label = s;
      rec.split = e + spec.test_episodes_per_show < spec.episodes_per_show ? Split::train : Split::test;
      rec.channel = detail::draw_channel(rng, model.dominant_channel[g], spec.metadata_mass);
      rec.broadcast_hour = detail::draw_hour(rng, model.dominant_chunk[g], spec.metadata_mass);

      const auto episode_mix =
          sample_dirichlet(rng, detail::scaled(model.show_mixtures[s], spec.show_concentration));
      Matrix frames(0, 0);
      std::string transcript;
      std::vector<double> frame(spec.feature_dim);
      for (std::size_t seg = 0; seg < spec.segments_per_show; ++seg) {
        const auto segment_mix =
            sample_dirichlet(rng, detail::scaled(episode_mix, spec.segment_concentration));
        const std::size_t tokens = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
        const std::size_t start = frames.rows();
        for (std::size_t t = 0; t < tokens; ++t) {
          const std::size_t topic = sample_categorical(rng, segment_mix);
          const std::size_t word = sample_categorical(rng, model.acoustic_topics[topic]);
          const std::size_t text_word = sample_categorical(rng, model.text_topics[topic]);
          for (std::size_t r = 0; r < spec.frames_per_token; ++r) {
            for (std::size_t d = 0; d < spec.feature_dim; ++d)
              frame[d] = model.emitter_means(word, d) + noise(rng);
            frames.append_row(frame);
          }
          transcript += fmt::format("{}w{:04}", t ? " " : "", text_word);
        }
        transcript += "\n";
        rec.segments.push_back({start, frames.rows()});
      }
      rec.num_frames = frames.rows();
      rec.features_path = out_dir / "features" / (rec.show_id + ".bin");
      rec.transcript_path = out_dir / "transcripts" / (rec.show_id + ".txt");
      save_feature_matrix(rec.features_path, frames);
      write_text_file(*rec.transcript_path, transcript);
      records.push_back(std::move(rec));
    }
  }

  const auto manifest_path = out_dir / "corpus.manifest";
  save_manifest(manifest_path, manifest, records);

  std::string genre_truth = "show_id\tclass\n", show_truth = "show_id\tclass\n";
  for (const auto& r : records) {
    genre_truth += fmt::format("{}\t{}\n", r.show_id, r.genre_label);
    show_truth += fmt::format("{}\t{}\n", r.show_id, r.show_label);
  }
  write_text_file(out_dir / "truth_genre.tsv", genre_truth);
  write_text_file(out_dir / "truth_show.tsv", show_truth);
  std::string map = "show\tgenre\n";
  for (std::size_t s = 0; s < spec.shows; ++s) map += fmt::format("{}\t{}\n", s, model.show_genre[s]);
  write_text_file(out_dir / "shows.map", map);
  return manifest_path;
}

}  // namespace mediatopic
