#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mediatopic/errors.hpp"
#include "mediatopic/matrix.hpp"

namespace mediatopic {

// Little-endian encoder into an in-memory buffer.
class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
  void put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(std::string_view bytes) { buffer_.append(bytes); }
  void put_string(std::string_view s) {
    put_u64(s.size());
    put_bytes(s);
  }
  void put_f64s(std::span<const double> values) {
    put_u64(values.size());
    for (double v : values) put_f64(v);
  }
  void put_matrix(const Matrix& m) {
    put_u64(m.rows());
    put_u64(m.cols());
    for (double v : m.data()) put_f64(v);
  }

  const std::string& bytes() const { return buffer_; }

 private:
  std::string buffer_;
};

// Little-endian decoder; every read is bounds-checked.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t get_u8() {
    require(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint64_t get_u64() {
    require(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get_u64()); }
  std::string_view get_bytes(std::size_t n) {
    require(n);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::string get_string() { return std::string(get_bytes(get_count(1))); }
  std::vector<double> get_f64s() {
    const std::size_t n = get_count(8);
    std::vector<double> out(n);
    for (auto& v : out) v = get_f64();
    return out;
  }
  Matrix get_matrix() {
    const std::uint64_t rows = get_u64();
    const std::uint64_t cols = get_u64();
    if (cols != 0 && rows > remaining() / 8 / cols) throw FormatError("truncated matrix payload");
    std::vector<double> data(rows * cols);
    for (auto& v : data) v = get_f64();
    return Matrix(rows, cols, std::move(data));
  }
  // Reads a length prefix and checks that `element_size * n` bytes remain.
  std::size_t get_count(std::size_t element_size) {
    const std::uint64_t n = get_u64();
    if (element_size != 0 && n > remaining() / element_size)
      throw FormatError("truncated payload: length prefix exceeds remaining bytes");
    return static_cast<std::size_t>(n);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void require(std::size_t n) const {
    if (remaining() < n) throw FormatError("truncated payload");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace mediatopic
