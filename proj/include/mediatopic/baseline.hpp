#pragma once

// Generative baseline: one GMM per class, documents classified by summed
// frame log-likelihood. A show-level classifier can also be evaluated on the
// genre task through a fixed show -> genre table.

#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/archive.hpp"
#include "mediatopic/corpus.hpp"
#include "mediatopic/gmm.hpp"

namespace mediatopic {

enum class ClassAxis { genre, show };

inline std::string_view to_string(ClassAxis a) { return a == ClassAxis::genre ? "genre" : "show"; }

inline ClassAxis parse_axis(std::string_view s) {
  if (s == "genre") return ClassAxis::genre;
  if (s == "show") return ClassAxis::show;
  throw UsageError(fmt::format("axis must be 'genre' or 'show', got '{}'", s));
}

inline std::size_t class_of(const ShowRecord& show, ClassAxis axis) {
  return axis == ClassAxis::genre ? show.genre_label : show.show_label;
}

inline std::size_t class_count(const CorpusManifest& m, ClassAxis axis) {
  return axis == ClassAxis::genre ? m.genre_names.size() : m.show_names.size();
}

inline const std::vector<std::string>& class_names(const CorpusManifest& m, ClassAxis axis) {
  return axis == ClassAxis::genre ? m.genre_names : m.show_names;
}

struct ClassGmmBank {
  ClassAxis axis = ClassAxis::genre;
  std::vector<GmmModel> models;

  std::size_t num_classes() const { return models.size(); }
  std::size_t dim() const { return models.empty() ? 0 : models.front().dim(); }

  void validate() const {
    if (models.empty()) throw ValidationError("class GMM bank is empty");
    for (const auto& m : models) {
      m.validate();
      if (m.dim() != models.front().dim())
        throw ValidationError("class GMMs disagree on feature dimension");
    }
  }
  bool operator==(const ClassGmmBank&) const = default;
};

// One GMM per class, each trained on that class's pooled frames.
inline ClassGmmBank train_class_gmms(std::span<const Matrix> class_frames,
                                     std::span<const std::string> class_names, ClassAxis axis,
                                     std::size_t components, const GmmTrainConfig& config = {}) {
  ClassGmmBank bank;
  bank.axis = axis;
  for (std::size_t c = 0; c < class_frames.size(); ++c) {
    const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
    if (class_frames[c].rows() == 0)
      throw ArgumentError(fmt::format("class '{}' has no training data", name));
    if (c > 0 && class_frames[c].cols() != class_frames[0].cols())
      throw DimensionError(fmt::format("class '{}' frames have a different dimension", name));
    bank.models.push_back(train_gmm(class_frames[c], components, config));
  }
  if (bank.models.empty()) throw ArgumentError("no classes to train");
  return bank;
}

// Pools the frames of every training-split show by class and trains the bank.
inline ClassGmmBank train_class_gmms(const Corpus& corpus, ClassAxis axis, std::size_t components,
                                     const GmmTrainConfig& config = {}) {
  const std::size_t n_classes = class_count(corpus.manifest, axis);
  std::vector<Matrix> pooled(n_classes);
  std::vector<std::size_t> shows_per_class(n_classes, 0);
  for (std::size_t i : corpus.indices(Split::train)) {
    const ShowRecord& show = corpus.shows[i];
    const std::size_t c = class_of(show, axis);
    ++shows_per_class[c];
    const auto doc = load_feature_matrix(show.features_path);
    for (std::size_t t = 0; t < doc.num_frames(); ++t) pooled[c].append_row(doc.frames.row(t));
  }
  const auto& names = class_names(corpus.manifest, axis);
  for (std::size_t c = 0; c < n_classes; ++c)
    if (shows_per_class[c] == 0)
      throw ArgumentError(fmt::format("{} class '{}' has no training shows", to_string(axis),
                                      names[c]));
  return train_class_gmms(pooled, names, axis, components, config);
}

struct LoglikDecision {
  std::size_t label = 0;
  std::vector<double> scores;  // per-class total (or mean) log-likelihood
};

inline LoglikDecision classify_loglik(const ClassGmmBank& bank, const AcousticDocument& doc,
                                      bool average_per_frame = false) {
  if (doc.num_frames() == 0) throw ArgumentError("document has no frames");
  if (doc.dim() != bank.dim())
    throw DimensionError(fmt::format("document has dimension {}, bank expects {}", doc.dim(),
                                     bank.dim()));
  LoglikDecision out;
  for (const auto& model : bank.models) {
    double ll = gmm_total_log_likelihood(model, doc.frames);
    if (average_per_frame) ll /= static_cast<double>(doc.num_frames());
    out.scores.push_back(ll);
  }
  out.label = argmax(out.scores);
  return out;
}

// Sends each predicted show index through the show -> genre table.
inline std::vector<std::size_t> map_show_to_genre(std::span<const std::size_t> show_predictions,
                                                  std::span<const std::size_t> show_to_genre) {
  std::vector<std::size_t> out;
  out.reserve(show_predictions.size());
  for (std::size_t s : show_predictions) {
    if (s >= show_to_genre.size())
      throw ArgumentError(fmt::format("show index {} is absent from the show->genre mapping", s));
    out.push_back(show_to_genre[s]);
  }
  return out;
}

template <>
struct ModelTraits<ClassGmmBank> {
  static constexpr ModelType type = ModelType::gmm_bank;
  static constexpr std::string_view name = "ClassGmmBank";
  static void write(ByteWriter& w, const ClassGmmBank& b) {
    w.put_u8(b.axis == ClassAxis::genre ? 0 : 1);
    w.put_u64(b.models.size());
    for (const auto& m : b.models) ModelTraits<GmmModel>::write(w, m);
  }
  static ClassGmmBank read(ByteReader& r) {
    ClassGmmBank b;
    const std::uint8_t axis = r.get_u8();
    if (axis > 1) throw FormatError("invalid class axis in GMM bank");
    b.axis = axis == 0 ? ClassAxis::genre : ClassAxis::show;
    const std::size_t n = r.get_count(1);
    for (std::size_t i = 0; i < n; ++i) b.models.push_back(ModelTraits<GmmModel>::read(r));
    b.validate();
    return b;
  }
};

}  // namespace mediatopic
