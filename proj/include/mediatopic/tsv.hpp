#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/binary_io.hpp"
#include "mediatopic/errors.hpp"

namespace mediatopic {

// One non-empty line of a tab-separated file.
struct TsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

inline std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Reads a TSV file, skipping blank lines and lines starting with '#'.
inline std::vector<TsvRow> read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::vector<TsvRow> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    rows.push_back({number, split(line, '\t')});
  }
  return rows;
}

inline std::string location(const std::filesystem::path& path, std::size_t line) {
  return fmt::format("{}:{}", path.string(), line);
}

inline double parse_double(std::string_view text, std::string_view where) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(fmt::format("{}: expected a number, found '{}'", where, text));
  return value;
}

inline std::int64_t parse_int(std::string_view text, std::string_view where) {
  text = trim(text);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(fmt::format("{}: expected an integer, found '{}'", where, text));
  return value;
}

inline std::size_t parse_index(std::string_view text, std::string_view where) {
  const std::int64_t v = parse_int(text, where);
  if (v < 0) throw ParseError(fmt::format("{}: expected a non-negative integer", where));
  return static_cast<std::size_t>(v);
}

// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double v) { return fmt::format("{}", v); }

inline std::string join_doubles(std::span<const double> values, char sep = '\t') {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(sep);
    out += format_double(values[i]);
  }
  return out;
}

// Key-value TSV (one "key<TAB>value" per line).
inline std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (const auto& row : read_tsv(path)) {
    if (row.fields.size() != 2)
      throw ParseError(location(path, row.line) + ": expected 'key<TAB>value'");
    const std::string key(trim(row.fields[0]));
    if (!out.emplace(key, std::string(trim(row.fields[1]))).second)
      throw ParseError(location(path, row.line) + ": duplicate key '" + key + "'");
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file_bytes(path, text);
}

}  // namespace mediatopic
