#pragma once

// File-level pipeline stages. Each stage reads the artifacts of earlier
// stages from disk and writes its own, so the CLI can run them one at a time
// and the pipeline can chain them.
//
// Artifact formats (all text files are tab-separated, header first):
//   <dir>/<show_id>.words   one acoustic word index per line
//   weighted/meta.tsv       key/value: vocabulary_size
//   weighted/index.tsv      doc_id, show_id, length, split, total_mass
//   weighted/docs/<doc_id>.tsv  type_id, mass
//   gammas.tsv              doc_id, show_id, length, split, gamma_0..gamma_{K-1}
//   features.tsv            show_id, x_0..x_{D-1}
//   scores.tsv              show_id, predicted, score_0..score_{C-1}
//   labels.tsv              show_id, class

#include <algorithm>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/baseline.hpp"
#include "mediatopic/corpus.hpp"
#include "mediatopic/errors.hpp"
#include "mediatopic/featurize.hpp"
#include "mediatopic/fusion.hpp"
#include "mediatopic/gmm.hpp"
#include "mediatopic/lda.hpp"
#include "mediatopic/parallel.hpp"
#include "mediatopic/random.hpp"
#include "mediatopic/svm.hpp"
#include "mediatopic/tsv.hpp"
#include "mediatopic/weighting.hpp"

namespace mediatopic {

enum class DocumentUnit { show, segment };

inline std::string_view to_string(DocumentUnit u) { return u == DocumentUnit::show ? "show" : "segment"; }

inline DocumentUnit parse_document_unit(std::string_view s) {
  if (s == "show") return DocumentUnit::show;
  if (s == "segment") return DocumentUnit::segment;
  throw UsageError(fmt::format("document unit must be show or segment; got '{}'", s));
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ParseError(fmt::format("split must be train or test; got '{}'", s));
}

// ---------------------------------------------------------------- acoustic words

inline std::filesystem::path words_path(const std::filesystem::path& dir, const std::string& show_id) {
  return dir / (show_id + ".words");
}

inline void save_words(const std::filesystem::path& path, std::span<const std::uint32_t> words) {
  std::string text;
  text.reserve(words.size() * 4);
  for (auto w : words) {
    text += std::to_string(w);
    text += '\n';
  }
  write_text_file(path, text);
}

inline TokenSequence load_words(const std::filesystem::path& path) {
  TokenSequence out;
  for (const auto& row : read_tsv(path)) {
    const std::string where = location(path, row.line);
    if (row.fields.size() != 1) throw ParseError(where + ": expected one word index per line");
    const std::size_t w = parse_index(row.fields[0], where);
    if (w > std::numeric_limits<std::uint32_t>::max()) throw ParseError(where + ": word index too large");
    out.push_back(static_cast<std::uint32_t>(w));
  }
  return out;
}

// One GMM over the pooled frames of every training-split show.
inline GmmModel stage_train_gmm(const Corpus& corpus, std::size_t components,
                                const GmmTrainConfig& config = {},
                                std::vector<EmIterationRecord>* trace = nullptr) {
  Matrix pooled;
  for (std::size_t i : corpus.indices(Split::train)) {
    const auto doc = load_feature_matrix(corpus.shows[i].features_path);
    for (std::size_t t = 0; t < doc.num_frames(); ++t) pooled.append_row(doc.frames.row(t));
  }
  if (pooled.rows() == 0) throw ArgumentError("corpus has no training frames");
  return train_gmm(pooled, components, config, trace);
}

inline void stage_quantize(const GmmModel& model, const Corpus& corpus,
                           const std::filesystem::path& out_dir, std::size_t threads = 0) {
  std::filesystem::create_directories(out_dir);
  parallel_for(corpus.shows.size(), threads, [&](std::size_t i) {
    const auto& show = corpus.shows[i];
    save_words(words_path(out_dir, show.show_id),
               quantize_document(model, load_feature_matrix(show.features_path)).words);
  });
}

// ---------------------------------------------------------------- documents

struct DocumentRecord {
  std::string doc_id;
  std::string show_id;
  double length = 0.0;  // frames for acoustic documents, tokens for text documents
  Split split = Split::train;
  TokenSequence tokens;
};

inline std::string segment_doc_id(const std::string& show_id, std::size_t segment) {
  return fmt::format("{}.s{:03}", show_id, segment);
}

inline std::vector<DocumentRecord> acoustic_documents(const Corpus& corpus,
                                                      const std::filesystem::path& words_dir,
                                                      DocumentUnit unit) {
  std::vector<DocumentRecord> docs;
  for (const auto& show : corpus.shows) {
    const auto path = words_path(words_dir, show.show_id);
    TokenSequence words = load_words(path);
    if (words.size() != show.num_frames)
      throw ValidationError(fmt::format("{}: {} words for a show with {} frames", path.string(),
                                        words.size(), show.num_frames));
    if (unit == DocumentUnit::show) {
      const double length = static_cast<double>(words.size());
      docs.push_back({show.show_id, show.show_id, length, show.split, std::move(words)});
      continue;
    }
    for (std::size_t s = 0; s < show.segments.size(); ++s) {
      const auto& seg = show.segments[s];
      docs.push_back({segment_doc_id(show.show_id, s), show.show_id,
                      static_cast<double>(seg.end_frame - seg.start_frame), show.split,
                      TokenSequence(words.begin() + static_cast<std::ptrdiff_t>(seg.start_frame),
                                    words.begin() + static_cast<std::ptrdiff_t>(seg.end_frame))});
    }
  }
  return docs;
}

inline std::vector<std::string> read_transcript_tokens(const ShowRecord& show) {
  if (!show.transcript_path)
    throw ArgumentError(fmt::format("show '{}' has no transcript", show.show_id));
  return tokenize(read_file_bytes(*show.transcript_path));
}

// Vocabulary over the training-split transcripts.
inline TextVocabulary build_text_vocabulary(const Corpus& corpus) {
  std::vector<std::vector<std::string>> docs;
  for (std::size_t i : corpus.indices(Split::train)) docs.push_back(read_transcript_tokens(corpus.shows[i]));
  auto vocab = TextVocabulary::build(docs);
  if (vocab.size() == 0) throw ArgumentError("training transcripts contain no tokens");
  return vocab;
}

// Whole-show text documents.
inline std::vector<DocumentRecord> text_documents(const Corpus& corpus, const TextVocabulary& vocab) {
  std::vector<DocumentRecord> docs;
  for (const auto& show : corpus.shows) {
    const auto tokens = read_transcript_tokens(show);
    docs.push_back({show.show_id, show.show_id, static_cast<double>(tokens.size()), show.split,
                    vocab.encode(tokens)});
  }
  return docs;
}

// ---------------------------------------------------------------- weighting

inline IdfTable stage_build_idf(std::span<const DocumentRecord> docs, std::size_t vocabulary_size) {
  std::vector<TokenSequence> train;
  for (const auto& d : docs)
    if (d.split == Split::train) train.push_back(d.tokens);
  if (train.empty()) throw ArgumentError("no training documents for the idf table");
  return build_idf(train, vocabulary_size);
}

struct WeightedIndexEntry {
  std::string doc_id;
  std::string show_id;
  double length = 0.0;
  Split split = Split::train;
  double total_mass = 0.0;
};

struct WeightedCorpus {
  std::size_t vocabulary_size = 0;
  std::vector<WeightedIndexEntry> index;
  std::vector<WeightedDocument> docs;
};

inline WeightedCorpus weight_documents(std::span<const DocumentRecord> docs, const IdfTable& idf,
                                       MassMode mode = MassMode::fractional) {
  WeightedCorpus out;
  out.vocabulary_size = idf.vocabulary_size;
  for (const auto& d : docs) {
    // An empty token list (e.g. an all-OOV transcript) becomes a zero-mass document.
    WeightedDocument w = d.tokens.empty() ? WeightedDocument{} : weight_document(d.tokens, idf, mode);
    out.index.push_back({d.doc_id, d.show_id, d.length, d.split, w.total_mass});
    out.docs.push_back(std::move(w));
  }
  return out;
}

inline void save_weighted_corpus(const std::filesystem::path& dir, const WeightedCorpus& wc) {
  write_text_file(dir / "meta.tsv", fmt::format("vocabulary_size\t{}\n", wc.vocabulary_size));
  std::string index = "doc_id\tshow_id\tlength\tsplit\ttotal_mass\n";
  for (std::size_t i = 0; i < wc.index.size(); ++i) {
    const auto& e = wc.index[i];
    index += fmt::format("{}\t{}\t{}\t{}\t{}\n", e.doc_id, e.show_id, format_double(e.length),
                         to_string(e.split), format_double(e.total_mass));
    save_weighted_document(dir / "docs" / (e.doc_id + ".tsv"), wc.docs[i]);
  }
  write_text_file(dir / "index.tsv", index);
}

inline WeightedCorpus load_weighted_corpus(const std::filesystem::path& dir) {
  WeightedCorpus wc;
  const auto meta_path = dir / "meta.tsv";
  const auto meta = read_key_values(meta_path);
  const auto it = meta.find("vocabulary_size");
  if (it == meta.end()) throw ParseError(meta_path.string() + ": missing vocabulary_size");
  wc.vocabulary_size = parse_index(it->second, meta_path.string());
  const auto index_path = dir / "index.tsv";
  const auto rows = read_tsv(index_path);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = location(index_path, row.line);
    if (row.fields.size() != 5) throw ParseError(where + ": expected 5 columns");
    WeightedIndexEntry e{row.fields[0], row.fields[1], parse_double(row.fields[2], where),
                         parse_split(row.fields[3]), parse_double(row.fields[4], where)};
    wc.docs.push_back(load_weighted_document(dir / "docs" / (e.doc_id + ".tsv")));
    wc.index.push_back(std::move(e));
  }
  return wc;
}

// ---------------------------------------------------------------- LDA

// Trains on the training-split documents with positive mass.
inline LdaModel stage_train_lda(const WeightedCorpus& wc, std::size_t num_topics,
                                const LdaTrainConfig& config = {},
                                std::vector<LdaTrainRecord>* trace = nullptr) {
  std::vector<WeightedDocument> train;
  for (std::size_t i = 0; i < wc.docs.size(); ++i)
    if (wc.index[i].split == Split::train && !wc.docs[i].degenerate()) train.push_back(wc.docs[i]);
  if (train.empty()) throw ArgumentError("no training documents with positive mass");
  return train_lda(train, num_topics, wc.vocabulary_size, config, trace);
}

struct GammaRow {
  std::string doc_id;
  std::string show_id;
  double length = 0.0;
  Split split = Split::train;
  std::vector<double> gamma;
};

// Posterior Dirichlet parameters for every document with positive mass.
inline std::vector<GammaRow> stage_infer(const LdaModel& model, const WeightedCorpus& wc,
                                         const LdaInferenceConfig& config = {},
                                         std::size_t threads = 0) {
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < wc.docs.size(); ++i)
    if (!wc.docs[i].degenerate()) live.push_back(i);
  std::vector<GammaRow> rows(live.size());
  parallel_for(live.size(), threads, [&](std::size_t j) {
    const auto& e = wc.index[live[j]];
    rows[j] = {e.doc_id, e.show_id, e.length, e.split,
               infer_document(model, wc.docs[live[j]], config).gamma};
  });
  return rows;
}

inline std::string format_gammas(std::span<const GammaRow> rows) {
  const std::size_t k = rows.empty() ? 0 : rows.front().gamma.size();
  std::string text = "doc_id\tshow_id\tlength\tsplit";
  for (std::size_t i = 0; i < k; ++i) text += fmt::format("\tgamma_{}", i);
  text += '\n';
  for (const auto& r : rows)
    text += fmt::format("{}\t{}\t{}\t{}\t{}\n", r.doc_id, r.show_id, format_double(r.length),
                        to_string(r.split), join_doubles(r.gamma));
  return text;
}

inline void save_gammas(const std::filesystem::path& path, std::span<const GammaRow> rows) {
  write_text_file(path, format_gammas(rows));
}

inline std::vector<GammaRow> load_gammas(const std::filesystem::path& path) {
  const auto rows = read_tsv(path);
  if (rows.empty()) throw ParseError(path.string() + ": missing header");
  const std::size_t cols = rows.front().fields.size();
  if (cols < 5) throw ParseError(location(path, rows.front().line) + ": expected at least 5 columns");
  std::vector<GammaRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    const std::string where = location(path, rows[i].line);
    if (f.size() != cols) throw ParseError(fmt::format("{}: expected {} columns", where, cols));
    GammaRow r{f[0], f[1], parse_double(f[2], where), parse_split(f[3]), {}};
    for (std::size_t c = 4; c < cols; ++c) r.gamma.push_back(parse_double(f[c], where));
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------- features

struct FeaturizeOptions {
  PoolingMode mode = PoolingMode::hard;
  bool with_metadata = false;
  bool metadata_only = false;  // ignore posteriors; emit only the 12 one-hot dimensions
};

// One feature row per corpus show, in corpus order. Shows whose documents all
// had zero mass have no posterior and raise an error.
inline std::vector<ShowFeature> stage_featurize(const Corpus& corpus, std::span<const GammaRow> gammas,
                                                const FeaturizeOptions& options) {
  std::map<std::string, std::vector<const GammaRow*>> by_show;
  for (const auto& g : gammas) by_show[g.show_id].push_back(&g);
  std::vector<ShowFeature> out;
  for (const auto& show : corpus.shows) {
    std::vector<double> values;
    if (!options.metadata_only) {
      const auto it = by_show.find(show.show_id);
      if (it == by_show.end())
        throw ArgumentError(fmt::format("show '{}' has no posterior to featurize", show.show_id));
      std::vector<std::vector<double>> vectors;
      std::vector<double> lengths;
      for (const GammaRow* g : it->second) {
        vectors.push_back(g->gamma);
        lengths.push_back(g->length);
      }
      values = pool_segments(vectors, lengths, options.mode);
    }
    if (options.with_metadata || options.metadata_only)
      values = append_metadata(values, show.channel, time_chunk(show.broadcast_hour));
    out.push_back({show.show_id, std::move(values)});
  }
  return out;
}

inline void save_features(const std::filesystem::path& path, std::span<const ShowFeature> features) {
  const std::size_t d = features.empty() ? 0 : features.front().values.size();
  std::string text = "show_id";
  for (std::size_t i = 0; i < d; ++i) text += fmt::format("\tx_{}", i);
  text += '\n';
  for (const auto& f : features) text += f.show_id + '\t' + join_doubles(f.values) + '\n';
  write_text_file(path, text);
}

inline std::vector<ShowFeature> load_features(const std::filesystem::path& path) {
  const auto rows = read_tsv(path);
  if (rows.empty()) throw ParseError(path.string() + ": missing header");
  const std::size_t cols = rows.front().fields.size();
  std::vector<ShowFeature> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    const std::string where = location(path, rows[i].line);
    if (f.size() != cols) throw ParseError(fmt::format("{}: expected {} columns", where, cols));
    ShowFeature s{f[0], {}};
    for (std::size_t c = 1; c < cols; ++c) s.values.push_back(parse_double(f[c], where));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- labels and scores

using LabelMap = std::map<std::string, std::size_t>;

inline LabelMap corpus_labels(const Corpus& corpus, ClassAxis axis) {
  LabelMap out;
  for (const auto& s : corpus.shows) out[s.show_id] = class_of(s, axis);
  return out;
}

inline void save_labels(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const LabelMap& labels) {
  std::string text = "show_id\tclass\n";
  for (const auto& id : ids) text += fmt::format("{}\t{}\n", id, labels.at(id));
  write_text_file(path, text);
}

// Reads "show_id<TAB>class" rows (extra columns ignored). Also accepts the
// scores format, whose second column is the predicted class. Keeps file order
// in `order` when non-null.
inline LabelMap load_labels(const std::filesystem::path& path, std::vector<std::string>* order = nullptr) {
  const auto rows = read_tsv(path);
  LabelMap out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    const std::string where = location(path, rows[i].line);
    if (f.size() < 2) throw ParseError(where + ": expected 'show_id<TAB>class'");
    if (!out.emplace(f[0], parse_index(f[1], where)).second)
      throw ValidationError(fmt::format("{}: duplicate show id '{}'", where, f[0]));
    if (order) order->push_back(f[0]);
  }
  return out;
}

// Two-column index map such as show -> genre.
inline std::vector<std::size_t> load_index_map(const std::filesystem::path& path) {
  std::vector<std::size_t> out;
  const auto rows = read_tsv(path);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    const std::string where = location(path, rows[i].line);
    if (f.size() != 2) throw ParseError(where + ": expected 'from<TAB>to'");
    const std::size_t from = parse_index(f[0], where);
    if (from != out.size()) throw ParseError(where + ": map keys must be consecutive from 0");
    out.push_back(parse_index(f[1], where));
  }
  return out;
}

struct ScoreTable {
  std::vector<std::string> ids;
  std::vector<std::size_t> predicted;
  Matrix scores;  // rows follow ids; may have zero columns
};

inline std::string format_scores(const ScoreTable& t) {
  std::string text = "show_id\tpredicted";
  for (std::size_t c = 0; c < t.scores.cols(); ++c) text += fmt::format("\tscore_{}", c);
  text += '\n';
  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    text += fmt::format("{}\t{}", t.ids[i], t.predicted[i]);
    if (t.scores.cols()) text += '\t' + join_doubles(t.scores.row(i));
    text += '\n';
  }
  return text;
}

inline void save_scores(const std::filesystem::path& path, const ScoreTable& t) {
  write_text_file(path, format_scores(t));
}

inline ScoreTable load_scores(const std::filesystem::path& path) {
  const auto rows = read_tsv(path);
  if (rows.empty()) throw ParseError(path.string() + ": missing header");
  const std::size_t cols = rows.front().fields.size();
  if (cols < 2) throw ParseError(path.string() + ": expected show_id and predicted columns");
  ScoreTable t;
  t.scores = Matrix(0, cols - 2);
  std::vector<double> row(cols - 2);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    const std::string where = location(path, rows[i].line);
    if (f.size() != cols) throw ParseError(fmt::format("{}: expected {} columns", where, cols));
    t.ids.push_back(f[0]);
    t.predicted.push_back(parse_index(f[1], where));
    for (std::size_t c = 2; c < cols; ++c) row[c - 2] = parse_double(f[c], where);
    if (cols > 2) t.scores.append_row(row);
  }
  return t;
}

// Rows of `table` reordered to follow `ids`.
inline Matrix align_scores(const ScoreTable& table, std::span<const std::string> ids,
                           const std::string& what) {
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < table.ids.size(); ++i) position[table.ids[i]] = i;
  Matrix out(ids.size(), table.scores.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = position.find(ids[i]);
    if (it == position.end()) throw ValidationError(fmt::format("{} has no row for '{}'", what, ids[i]));
    std::copy_n(table.scores.row(it->second).begin(), out.cols(), out.row(i).begin());
  }
  return out;
}

// ---------------------------------------------------------------- SVM stages

inline std::vector<std::vector<double>> feature_values(std::span<const ShowFeature> features) {
  std::vector<std::vector<double>> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.values);
  return out;
}

inline std::vector<std::size_t> labels_for(std::span<const ShowFeature> features, const LabelMap& labels) {
  std::vector<std::size_t> out;
  for (const auto& f : features) {
    const auto it = labels.find(f.show_id);
    if (it == labels.end()) throw ValidationError(fmt::format("no label for show '{}'", f.show_id));
    out.push_back(it->second);
  }
  return out;
}

inline std::vector<ShowFeature> select_split(std::span<const ShowFeature> features, const Corpus& corpus,
                                             Split split) {
  std::set<std::string> wanted;
  for (std::size_t i : corpus.indices(split)) wanted.insert(corpus.shows[i].show_id);
  std::vector<ShowFeature> out;
  for (const auto& f : features)
    if (wanted.count(f.show_id)) out.push_back(f);
  return out;
}

inline ScoreTable score_svm(const SvmModel& model, std::span<const ShowFeature> features) {
  ScoreTable t;
  t.scores = Matrix(0, model.num_classes());
  for (const auto& f : features) {
    const auto s = svm_scores(model, f.values);
    t.ids.push_back(f.show_id);
    t.predicted.push_back(argmax(s));
    t.scores.append_row(s);
  }
  return t;
}

// Stratified fold assignment: each class's items are shuffled and dealt
// round-robin, continuing the deal across classes.
inline std::vector<std::size_t> stratified_folds(std::span<const std::size_t> labels, std::size_t folds,
                                                 std::uint64_t seed) {
  if (folds < 2) throw ArgumentError("cross-validation needs at least two folds");
  if (labels.size() < folds)
    throw ArgumentError(fmt::format("{} items cannot fill {} folds", labels.size(), folds));
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng = make_rng(seed, "cv-folds");
  std::vector<std::size_t> fold(labels.size());
  std::size_t deal = 0;
  for (auto& [c, items] : by_class) {
    std::shuffle(items.begin(), items.end(), rng);
    for (std::size_t i : items) fold[i] = deal++ % folds;
  }
  return fold;
}

// Out-of-fold SVM scores: every item is scored by a model trained on the
// other folds. Folds whose training part holds a single class are scored by a
// zero model (all scores 0).
inline ScoreTable cross_validated_scores(std::span<const ShowFeature> features,
                                         std::span<const std::size_t> labels, std::size_t num_classes,
                                         std::size_t folds, const SvmTrainConfig& config) {
  if (features.size() != labels.size()) throw DimensionError("feature and label counts differ");
  const auto fold = stratified_folds(labels, folds, config.seed);
  ScoreTable t;
  t.ids.resize(features.size());
  t.predicted.resize(features.size());
  t.scores = Matrix(features.size(), num_classes);
  for (std::size_t k = 0; k < folds; ++k) {
    std::vector<std::vector<double>> x;
    std::vector<std::size_t> y;
    for (std::size_t i = 0; i < features.size(); ++i)
      if (fold[i] != k) {
        x.push_back(features[i].values);
        y.push_back(labels[i]);
      }
    SvmModel model;
    model.feature_dim = features.front().values.size();
    model.weights = Matrix(num_classes, model.feature_dim + 1);
    if (std::set<std::size_t>(y.begin(), y.end()).size() >= 2) {
      SvmTrainConfig fold_config = config;
      fold_config.seed = derive_seed(config.seed, fmt::format("cv-fold-{}", k));
      model = train_svm(x, y, num_classes, fold_config);
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (fold[i] != k) continue;
      const auto s = svm_scores(model, features[i].values);
      t.ids[i] = features[i].show_id;
      t.predicted[i] = argmax(s);
      std::copy(s.begin(), s.end(), t.scores.row(i).begin());
    }
  }
  return t;
}

// ---------------------------------------------------------------- fusion stages

inline ScoreTable fuse_tables(const FusionModel& model, std::span<const ScoreTable> systems) {
  if (systems.empty()) throw ArgumentError("no score tables to fuse");
  const auto& ids = systems.front().ids;
  std::vector<Matrix> aligned;
  for (std::size_t k = 0; k < systems.size(); ++k)
    aligned.push_back(align_scores(systems[k], ids, fmt::format("score table {}", k)));
  ScoreTable t;
  t.ids = ids;
  t.scores = Matrix(0, model.num_classes());
  std::vector<std::vector<double>> rows(systems.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t k = 0; k < systems.size(); ++k)
      rows[k].assign(aligned[k].row(i).begin(), aligned[k].row(i).end());
    const auto fused = fuse_scores(model, rows);
    t.predicted.push_back(argmax(fused));
    t.scores.append_row(fused);
  }
  return t;
}

inline FusionModel stage_train_fusion(std::span<const ScoreTable> systems, const LabelMap& labels,
                                      const FusionTrainConfig& config = {}) {
  if (systems.empty()) throw ArgumentError("no score tables to fuse");
  std::vector<std::string> ids;
  std::vector<std::size_t> y;
  for (const auto& id : systems.front().ids) {
    const auto it = labels.find(id);
    if (it == labels.end()) throw ValidationError(fmt::format("no label for show '{}'", id));
    ids.push_back(id);
    y.push_back(it->second);
  }
  std::vector<Matrix> aligned;
  for (std::size_t k = 0; k < systems.size(); ++k)
    aligned.push_back(align_scores(systems[k], ids, fmt::format("score table {}", k)));
  return train_fusion(aligned, y, config);
}

}  // namespace mediatopic
