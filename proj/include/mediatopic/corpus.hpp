#pragma once

// Corpus layout on disk.
//
// corpus.manifest (TSV):
//   @feature_dim<TAB>F
//   @frame_period_ms<TAB>10
//   @vocabulary_size<TAB>V          (optional hint)
//   @genres<TAB>genres.tsv          (header "name", one genre per line)
//   @shows<TAB>shows.tsv            (header "name<TAB>genre")
//   show_id genre show_name channel hour split features_path transcript_path segments_path
//   ...one record per show...
//
// Paths are relative to the manifest directory; "-" means absent. A missing
// segments file means the whole show is one segment.
//
// Feature matrices: binary, header of four little-endian u64 (magic, version,
// T, F) then T*F little-endian f64 row-major. Files ending in ".csv" use the
// text fallback: first line "T,F", then T lines of F comma-separated values.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/binary_io.hpp"
#include "mediatopic/errors.hpp"
#include "mediatopic/matrix.hpp"
#include "mediatopic/tsv.hpp"

namespace mediatopic {

namespace fs = std::filesystem;

inline constexpr std::uint64_t kFeatureMagic = 0x0000'5441'4546'544dULL;  // "MTFEAT"
inline constexpr std::uint64_t kFeatureVersion = 1;
inline constexpr std::string_view kManifestHeader =
    "show_id\tgenre\tshow_name\tchannel\thour\tsplit\tfeatures_path\ttranscript_path\tsegments_path";

enum class Split { train, test };

inline std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

// Half-open frame range [start_frame, end_frame).
struct SegmentRef {
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  std::size_t length() const { return end_frame - start_frame; }
  bool operator==(const SegmentRef&) const = default;
};

struct ShowRecord {
  std::string show_id;
  std::size_t genre_label = 0;
  std::size_t show_label = 0;
  int channel = 1;
  int broadcast_hour = 0;
  Split split = Split::train;
  fs::path features_path;
  std::optional<fs::path> transcript_path;
  std::vector<SegmentRef> segments;
  std::size_t num_frames = 0;

  bool operator==(const ShowRecord&) const = default;
};

struct CorpusManifest {
  fs::path root;
  std::size_t feature_dim = 0;
  double frame_period_ms = 10.0;
  std::size_t vocabulary_size_hint = 0;
  std::vector<std::string> genre_names;
  std::vector<std::string> show_names;
  std::vector<std::size_t> show_to_genre;

  bool operator==(const CorpusManifest&) const = default;
};

struct Corpus {
  CorpusManifest manifest;
  std::vector<ShowRecord> shows;

  std::vector<std::size_t> indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < shows.size(); ++i)
      if (shows[i].split == split) out.push_back(i);
    return out;
  }
  const ShowRecord& find(std::string_view show_id) const {
    for (const auto& s : shows)
      if (s.show_id == show_id) return s;
    throw ArgumentError(fmt::format("unknown show_id '{}'", show_id));
  }

  bool operator==(const Corpus&) const = default;
};

// A T x F matrix of frame features.
struct AcousticDocument {
  Matrix frames;
  std::size_t num_frames() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
};

struct MatrixShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

namespace detail {

inline bool is_csv(const fs::path& path) { return path.extension() == ".csv"; }

inline MatrixShape parse_csv_shape(const fs::path& path, std::string_view line) {
  const auto parts = split(trim(line), ',');
  if (parts.size() != 2) throw ParseError(location(path, 1) + ": expected header 'T,F'");
  return {parse_index(parts[0], location(path, 1)), parse_index(parts[1], location(path, 1))};
}

inline Matrix read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty feature file");
  const MatrixShape shape = parse_csv_shape(path, line);
  std::vector<double> data;
  data.reserve(shape.rows * shape.cols);
  std::size_t number = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto parts = split(trim(line), ',');
    if (parts.size() != shape.cols)
      throw ParseError(fmt::format("{}: expected {} values, found {}", location(path, number),
                                   shape.cols, parts.size()));
    for (const auto& p : parts) data.push_back(parse_double(p, location(path, number)));
    ++rows;
  }
  if (rows != shape.rows)
    throw ParseError(fmt::format("{}: header declares {} rows, found {}", path.string(),
                                 shape.rows, rows));
  return Matrix(shape.rows, shape.cols, std::move(data));
}

inline MatrixShape read_binary_shape(ByteReader& r, const fs::path& path) {
  try {
    if (r.get_u64() != kFeatureMagic)
      throw FormatError(path.string() + ": not a feature matrix (bad magic)");
    const std::uint64_t version = r.get_u64();
    if (version != kFeatureVersion)
      throw FormatError(fmt::format("{}: feature format version: expected {}, found {}",
                                    path.string(), kFeatureVersion, version));
    MatrixShape shape;
    shape.rows = r.get_u64();
    shape.cols = r.get_u64();
    return shape;
  } catch (const FormatError& e) {
    if (std::string_view(e.what()).starts_with(path.string())) throw;
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace detail

inline std::string encode_feature_matrix(const Matrix& m) {
  ByteWriter w;
  w.put_u64(kFeatureMagic);
  w.put_u64(kFeatureVersion);
  w.put_u64(m.rows());
  w.put_u64(m.cols());
  for (double v : m.data()) w.put_f64(v);
  return w.bytes();
}

inline void save_feature_matrix(const fs::path& path, const Matrix& m) {
  write_file_bytes(path, encode_feature_matrix(m));
}

// Validates shape and finiteness; throws ValidationError naming the row.
inline void validate_frames(const Matrix& m, const fs::path& path) {
  if (m.rows() < 1 || m.cols() < 1)
    throw ValidationError(path.string() + ": feature matrix must have T >= 1 and F >= 1");
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (double v : m.row(r))
      if (!std::isfinite(v))
        throw ValidationError(fmt::format("{}: non-finite value at row {}", path.string(), r));
}

inline AcousticDocument load_feature_matrix(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing feature file: " + path.string());
  Matrix m;
  if (detail::is_csv(path)) {
    m = detail::read_csv_matrix(path);
  } else {
    const std::string bytes = read_file_bytes(path);
    ByteReader r(bytes);
    const MatrixShape shape = detail::read_binary_shape(r, path);
    if (shape.cols != 0 && r.remaining() / 8 / shape.cols < shape.rows)
      throw FormatError(path.string() + ": truncated feature data");
    std::vector<double> data(shape.rows * shape.cols);
    for (auto& v : data) v = r.get_f64();
    if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes after feature data");
    m = Matrix(shape.rows, shape.cols, std::move(data));
  }
  validate_frames(m, path);
  return AcousticDocument{std::move(m)};
}

// Reads only the declared shape of a feature file.
inline MatrixShape read_feature_shape(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing feature file: " + path.string());
  if (detail::is_csv(path)) {
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty feature file");
    return detail::parse_csv_shape(path, line);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path.string());
  std::string header(32, '\0');
  in.read(header.data(), 32);
  header.resize(static_cast<std::size_t>(in.gcount()));
  ByteReader r(header);
  return detail::read_binary_shape(r, path);
}

inline std::vector<SegmentRef> load_segments(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing segments file: " + path.string());
  std::vector<SegmentRef> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream fields{std::string(t)};
    std::string a, b, extra;
    if (!(fields >> a >> b) || (fields >> extra))
      throw ParseError(location(path, number) + ": expected 'start_frame end_frame'");
    out.push_back({parse_index(a, location(path, number)), parse_index(b, location(path, number))});
  }
  return out;
}

inline void save_segments(const fs::path& path, std::span<const SegmentRef> segments) {
  std::string text;
  for (const auto& s : segments) text += fmt::format("{}\t{}\n", s.start_frame, s.end_frame);
  write_text_file(path, text);
}

namespace detail {

inline std::vector<std::string> read_name_table(const fs::path& path, std::size_t columns,
                                                std::vector<std::string>* second_column) {
  const auto rows = read_tsv(path);
  if (rows.empty()) throw ValidationError(path.string() + ": label table has no header");
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.fields.size() != columns)
      throw ParseError(fmt::format("{}: expected {} columns", location(path, row.line), columns));
    std::string name(trim(row.fields[0]));
    if (!seen.insert(name).second)
      throw ValidationError(
          fmt::format("{}: duplicate label name '{}'", location(path, row.line), name));
    names.push_back(std::move(name));
    if (second_column) second_column->emplace_back(trim(row.fields[1]));
  }
  return names;
}

inline std::size_t lookup(const std::vector<std::string>& names, std::string_view name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return names.size();
}

inline std::optional<fs::path> optional_path(const fs::path& root, std::string_view field) {
  const auto t = trim(field);
  if (t.empty() || t == "-") return std::nullopt;
  return root / fs::path(std::string(t));
}

}  // namespace detail

// Loads and validates a corpus. Every ShowRecord invariant is checked here:
// label indices, channel and hour ranges, feature-matrix shape against the
// declared dimension, and segment bounds against the matrix row count.
inline Corpus load_corpus(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) throw IoError("missing manifest: " + manifest_path.string());
  Corpus corpus;
  CorpusManifest& m = corpus.manifest;
  m.root = manifest_path.parent_path();

  const auto rows = read_tsv(manifest_path);
  std::size_t i = 0;
  std::optional<fs::path> genres_path, shows_path;
  for (; i < rows.size() && rows[i].fields[0].starts_with('@'); ++i) {
    const auto& row = rows[i];
    const std::string where = location(manifest_path, row.line);
    if (row.fields.size() != 2) throw ParseError(where + ": expected '@key<TAB>value'");
    const std::string_view key = row.fields[0];
    const std::string_view value = trim(row.fields[1]);
    if (key == "@feature_dim") {
      m.feature_dim = parse_index(value, where);
    } else if (key == "@frame_period_ms") {
      m.frame_period_ms = parse_double(value, where);
    } else if (key == "@vocabulary_size") {
      m.vocabulary_size_hint = parse_index(value, where);
    } else if (key == "@genres") {
      genres_path = m.root / std::string(value);
    } else if (key == "@shows") {
      shows_path = m.root / std::string(value);
    } else {
      throw ParseError(fmt::format("{}: unknown directive '{}'", where, key));
    }
  }
  if (m.feature_dim == 0)
    throw ValidationError(manifest_path.string() + ": @feature_dim must be declared and >= 1");
  if (!genres_path || !shows_path)
    throw ValidationError(manifest_path.string() + ": @genres and @shows tables are required");
  if (!fs::exists(*genres_path)) throw IoError("missing label table: " + genres_path->string());
  if (!fs::exists(*shows_path)) throw IoError("missing label table: " + shows_path->string());

  m.genre_names = detail::read_name_table(*genres_path, 1, nullptr);
  std::vector<std::string> show_genres;
  m.show_names = detail::read_name_table(*shows_path, 2, &show_genres);
  for (std::size_t s = 0; s < m.show_names.size(); ++s) {
    const std::size_t g = detail::lookup(m.genre_names, show_genres[s]);
    if (g == m.genre_names.size())
      throw ValidationError(fmt::format("{}: show '{}' maps to unknown genre '{}'",
                                        shows_path->string(), m.show_names[s], show_genres[s]));
    m.show_to_genre.push_back(g);
  }

  auto joined = [](const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t f = 0; f < fields.size(); ++f) out += (f ? "\t" : "") + fields[f];
    return out;
  };
  if (i >= rows.size() || joined(rows[i].fields) != kManifestHeader)
    throw ParseError(manifest_path.string() + ": missing manifest header line");
  ++i;

  std::set<std::string> seen_ids;
  for (; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = location(manifest_path, row.line);
    if (row.fields.size() != 9) throw ParseError(where + ": expected 9 columns");
    ShowRecord show;
    show.show_id = std::string(trim(row.fields[0]));
    auto invalid = [&](std::string_view field, std::string_view what) {
      return ValidationError(
          fmt::format("{}: show '{}' field '{}': {}", where, show.show_id, field, what));
    };
    if (show.show_id.empty()) throw invalid("show_id", "empty");
    if (!seen_ids.insert(show.show_id).second)
      throw invalid("show_id", "appears more than once (each show belongs to exactly one split)");

    show.genre_label = detail::lookup(m.genre_names, trim(row.fields[1]));
    if (show.genre_label == m.genre_names.size()) throw invalid("genre", "unknown genre name");
    show.show_label = detail::lookup(m.show_names, trim(row.fields[2]));
    if (show.show_label == m.show_names.size()) throw invalid("show_name", "unknown show name");
    if (m.show_to_genre[show.show_label] != show.genre_label)
      throw invalid("genre", "disagrees with the show table's genre");

    const auto channel = parse_int(row.fields[3], where);
    if (channel < 1 || channel > 4) throw invalid("channel", "must be in 1..4");
    show.channel = static_cast<int>(channel);
    const auto hour = parse_int(row.fields[4], where);
    if (hour < 0 || hour > 23) throw invalid("hour", "must be in 0..23");
    show.broadcast_hour = static_cast<int>(hour);

    const std::string_view split_name = trim(row.fields[5]);
    if (split_name == "train") {
      show.split = Split::train;
    } else if (split_name == "test") {
      show.split = Split::test;
    } else {
      throw invalid("split", "must be 'train' or 'test'");
    }

    const auto features = detail::optional_path(m.root, row.fields[6]);
    if (!features) throw invalid("features_path", "required");
    show.features_path = *features;
    if (!fs::exists(show.features_path))
      throw IoError("missing feature file: " + show.features_path.string());
    const MatrixShape shape = read_feature_shape(show.features_path);
    if (shape.rows < 1) throw invalid("features_path", "feature matrix has no frames");
    if (shape.cols != m.feature_dim)
      throw invalid("features_path", fmt::format("feature dimension {} != declared {}",
                                                 shape.cols, m.feature_dim));
    show.num_frames = shape.rows;

    show.transcript_path = detail::optional_path(m.root, row.fields[7]);
    if (show.transcript_path && !fs::exists(*show.transcript_path))
      throw IoError("missing transcript: " + show.transcript_path->string());

    if (const auto seg_path = detail::optional_path(m.root, row.fields[8])) {
      show.segments = load_segments(*seg_path);
    } else {
      show.segments = {{0, show.num_frames}};
    }
    if (show.segments.empty()) throw invalid("segments_path", "no segments");
    for (std::size_t s = 0; s < show.segments.size(); ++s) {
      const auto& seg = show.segments[s];
      if (seg.start_frame >= seg.end_frame || seg.end_frame > show.num_frames)
        throw invalid("segments_path",
                      fmt::format("segment {} [{}, {}) outside frame range [0, {})", s,
                                  seg.start_frame, seg.end_frame, show.num_frames));
    }
    corpus.shows.push_back(std::move(show));
  }
  if (corpus.shows.empty())
    throw ValidationError(manifest_path.string() + ": corpus must contain ≥1 show");
  return corpus;
}

// Writes label tables, per-show segment files, and the manifest. Feature and
// transcript paths in `shows` are written relative to the manifest directory.
inline void save_manifest(const fs::path& manifest_path, const CorpusManifest& m,
                          std::span<const ShowRecord> shows) {
  const fs::path root = manifest_path.parent_path();
  std::string genres = "name\n";
  for (const auto& g : m.genre_names) genres += g + "\n";
  write_text_file(root / "genres.tsv", genres);
  std::string show_table = "name\tgenre\n";
  for (std::size_t s = 0; s < m.show_names.size(); ++s)
    show_table += m.show_names[s] + "\t" + m.genre_names[m.show_to_genre[s]] + "\n";
  write_text_file(root / "shows.tsv", show_table);

  auto rel = [&](const fs::path& p) { return fs::relative(p, root).generic_string(); };
  std::string text;
  text += fmt::format("@feature_dim\t{}\n", m.feature_dim);
  text += fmt::format("@frame_period_ms\t{}\n", format_double(m.frame_period_ms));
  if (m.vocabulary_size_hint) text += fmt::format("@vocabulary_size\t{}\n", m.vocabulary_size_hint);
  text += "@genres\tgenres.tsv\n@shows\tshows.tsv\n";
  text += std::string(kManifestHeader) + "\n";
  for (const auto& s : shows) {
    save_segments(root / "segments" / (s.show_id + ".seg"), s.segments);
    text += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", s.show_id,
                        m.genre_names[s.genre_label], m.show_names[s.show_label], s.channel,
                        s.broadcast_hour, to_string(s.split), rel(s.features_path),
                        s.transcript_path ? rel(*s.transcript_path) : "-",
                        "segments/" + s.show_id + ".seg");
  }
  write_text_file(manifest_path, text);
}

}  // namespace mediatopic
