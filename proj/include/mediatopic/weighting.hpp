#pragma once

// tf-idf masses over an acoustic-word or text vocabulary. Every occurrence of
// a type in a document carries the same weight, so a document collapses to
// one mass per type: m_v = tf(v) * idf(v), with idf(v) = ln(D / df(v)).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/archive.hpp"
#include "mediatopic/errors.hpp"
#include "mediatopic/tsv.hpp"

namespace mediatopic {

using TokenSequence = std::vector<std::uint32_t>;

struct IdfTable {
  std::size_t vocabulary_size = 0;
  std::size_t document_count = 0;
  std::vector<std::uint64_t> document_frequency;  // 0 for types never seen
  std::vector<double> idf;                        // unseen types use df = 1

  double idf_of(std::uint32_t type) const {
    if (type >= vocabulary_size)
      throw ArgumentError(fmt::format("type {} outside vocabulary of size {}", type,
                                      vocabulary_size));
    return idf[type];
  }

  void validate() const {
    if (document_count == 0) throw ValidationError("idf table built from zero documents");
    if (document_frequency.size() != vocabulary_size || idf.size() != vocabulary_size)
      throw ValidationError("idf table sizes disagree with the vocabulary size");
    for (std::size_t v = 0; v < vocabulary_size; ++v) {
      if (document_frequency[v] > document_count)
        throw ValidationError("document frequency exceeds document count");
      if (!(idf[v] >= 0.0) || !std::isfinite(idf[v])) throw ValidationError("invalid idf value");
    }
  }
  bool operator==(const IdfTable&) const = default;
};

struct TypeMass {
  std::uint32_t type = 0;
  double mass = 0.0;
  bool operator==(const TypeMass&) const = default;
};

// Sparse per-type masses, sorted by type. Zero-mass types are omitted.
struct WeightedDocument {
  std::vector<TypeMass> entries;
  double total_mass = 0.0;

  bool degenerate() const { return !(total_mass > 0.0); }
  bool operator==(const WeightedDocument&) const = default;
};

enum class MassMode {
  fractional,  // tf-idf masses used as fractional counts
  rounded,     // masses rounded to the nearest integer
};

inline IdfTable build_idf(std::span<const TokenSequence> documents, std::size_t vocabulary_size) {
  if (documents.empty()) throw ArgumentError("cannot build idf from an empty corpus");
  IdfTable table;
  table.vocabulary_size = vocabulary_size;
  table.document_count = documents.size();
  table.document_frequency.assign(vocabulary_size, 0);
  std::vector<std::size_t> last_seen(vocabulary_size, documents.size());
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (std::uint32_t v : documents[d]) {
      if (v >= vocabulary_size)
        throw ArgumentError(
            fmt::format("document {} has type {} outside vocabulary of size {}", d, v,
                        vocabulary_size));
      if (last_seen[v] != d) {
        last_seen[v] = d;
        ++table.document_frequency[v];
      }
    }
  }
  const double n_docs = static_cast<double>(table.document_count);
  table.idf.resize(vocabulary_size);
  for (std::size_t v = 0; v < vocabulary_size; ++v) {
    const double df = std::max<double>(1.0, static_cast<double>(table.document_frequency[v]));
    table.idf[v] = std::log(n_docs / df);
  }
  return table;
}

inline WeightedDocument weight_document(std::span<const std::uint32_t> tokens,
                                        const IdfTable& idf,
                                        MassMode mode = MassMode::fractional) {
  if (tokens.empty()) throw ArgumentError("document has no tokens");
  std::map<std::uint32_t, std::uint64_t> counts;
  for (std::uint32_t v : tokens) {
    if (v >= idf.vocabulary_size)
      throw ArgumentError(fmt::format("type {} outside vocabulary of size {}", v,
                                      idf.vocabulary_size));
    ++counts[v];
  }
  WeightedDocument doc;
  for (const auto& [type, count] : counts) {
    double mass = static_cast<double>(count) * idf.idf[type];
    if (mode == MassMode::rounded) mass = std::round(mass);
    if (mass > 0.0) {
      doc.entries.push_back({type, mass});
      doc.total_mass += mass;
    }
  }
  return doc;
}

// Whitespace tokenization with ASCII lowercasing; multi-byte UTF-8 sequences
// pass through unchanged.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

// String <-> id map for text documents, built from training transcripts with
// no minimum-count cutoff. Ids follow first occurrence.
class TextVocabulary {
 public:
  TextVocabulary() = default;

  static TextVocabulary build(std::span<const std::vector<std::string>> documents) {
    TextVocabulary vocab;
    for (const auto& doc : documents)
      for (const auto& tok : doc) vocab.add(tok);
    return vocab;
  }

  std::uint32_t add(const std::string& token) {
    const auto [it, inserted] = index_.emplace(token, static_cast<std::uint32_t>(tokens_.size()));
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  // Out-of-vocabulary tokens are dropped: they have no row in a topic model.
  TokenSequence encode(std::span<const std::string> tokens) const {
    TokenSequence out;
    out.reserve(tokens.size());
    for (const auto& t : tokens)
      if (auto it = index_.find(t); it != index_.end()) out.push_back(it->second);
    return out;
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::filesystem::path& path) const {
    std::string text = "id\ttoken\n";
    for (std::size_t i = 0; i < tokens_.size(); ++i) text += fmt::format("{}\t{}\n", i, tokens_[i]);
    write_text_file(path, text);
  }

  static TextVocabulary load(const std::filesystem::path& path) {
    const auto rows = read_tsv(path);
    TextVocabulary vocab;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& row = rows[i];
      const std::string where = location(path, row.line);
      if (row.fields.size() != 2) throw ParseError(where + ": expected 'id<TAB>token'");
      if (parse_index(row.fields[0], where) != vocab.size())
        throw ParseError(where + ": vocabulary ids must be consecutive from 0");
      if (vocab.add(row.fields[1]) + 1 != vocab.size())
        throw ValidationError(where + ": duplicate token '" + row.fields[1] + "'");
    }
    return vocab;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Sparse weighted document as TSV: "type_id<TAB>mass" per line.
inline void save_weighted_document(const std::filesystem::path& path, const WeightedDocument& doc) {
  std::string text;
  for (const auto& e : doc.entries) text += fmt::format("{}\t{}\n", e.type, format_double(e.mass));
  write_text_file(path, text);
}

inline WeightedDocument load_weighted_document(const std::filesystem::path& path) {
  WeightedDocument doc;
  for (const auto& row : read_tsv(path)) {
    const std::string where = location(path, row.line);
    if (row.fields.size() != 2) throw ParseError(where + ": expected 'type_id<TAB>mass'");
    const std::size_t type = parse_index(row.fields[0], where);
    const double mass = parse_double(row.fields[1], where);
    if (!(mass >= 0.0) || !std::isfinite(mass))
      throw ValidationError(where + ": mass must be finite and >= 0");
    if (!doc.entries.empty() && type <= doc.entries.back().type)
      throw ValidationError(where + ": types must be strictly increasing");
    doc.entries.push_back({static_cast<std::uint32_t>(type), mass});
    doc.total_mass += mass;
  }
  return doc;
}

template <>
struct ModelTraits<IdfTable> {
  static constexpr ModelType type = ModelType::idf;
  static constexpr std::string_view name = "IdfTable";
  static void write(ByteWriter& w, const IdfTable& t) {
    w.put_u64(t.vocabulary_size);
    w.put_u64(t.document_count);
    for (auto df : t.document_frequency) w.put_u64(df);
    w.put_f64s(t.idf);
  }
  static IdfTable read(ByteReader& r) {
    IdfTable t;
    t.vocabulary_size = r.get_u64();
    t.document_count = r.get_u64();
    if (t.vocabulary_size > r.remaining() / 8) throw FormatError("truncated idf table");
    t.document_frequency.resize(t.vocabulary_size);
    for (auto& df : t.document_frequency) df = r.get_u64();
    t.idf = r.get_f64s();
    t.validate();
    return t;
  }
};

}  // namespace mediatopic
