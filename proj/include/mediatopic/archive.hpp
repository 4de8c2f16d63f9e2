#pragma once

// Single-file model archives:
//   "MTOPIC" | format version (u8) | type tag (u8) | little-endian payload
// Each model type specializes ModelTraits with its tag and payload codec.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "mediatopic/binary_io.hpp"
#include "mediatopic/errors.hpp"

namespace mediatopic {

enum class ModelType : std::uint8_t {
  gmm = 1,
  lda = 2,
  idf = 3,
  svm = 4,
  fusion = 5,
  gmm_bank = 6,
};

inline constexpr std::string_view kArchiveMagic = "MTOPIC";
inline constexpr std::uint8_t kArchiveVersion = 1;

// Specialize with:
//   static constexpr ModelType type;
//   static constexpr std::string_view name;
//   static void write(ByteWriter&, const T&);
//   static T read(ByteReader&);
template <class T>
struct ModelTraits;

template <class T>
std::string serialize_model(const T& model) {
  ByteWriter w;
  w.put_bytes(kArchiveMagic);
  w.put_u8(kArchiveVersion);
  w.put_u8(static_cast<std::uint8_t>(ModelTraits<T>::type));
  ModelTraits<T>::write(w, model);
  return w.bytes();
}

template <class T>
T deserialize_model(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kArchiveMagic.size() + 2 ||
      r.get_bytes(kArchiveMagic.size()) != kArchiveMagic)
    throw FormatError("not a model archive: bad magic bytes");
  const std::uint8_t version = r.get_u8();
  if (version != kArchiveVersion)
    throw FormatError(fmt::format("unsupported archive format version: expected {}, found {}",
                                  kArchiveVersion, version));
  const std::uint8_t tag = r.get_u8();
  if (tag != static_cast<std::uint8_t>(ModelTraits<T>::type))
    throw FormatError(fmt::format("archive holds model type tag {}, expected {} ({})", tag,
                                  static_cast<int>(ModelTraits<T>::type), ModelTraits<T>::name));
  T model = ModelTraits<T>::read(r);
  if (!r.at_end()) throw FormatError("trailing bytes after model payload");
  return model;
}

template <class T>
void save_model(const std::filesystem::path& path, const T& model) {
  write_file_bytes(path, serialize_model(model));
}

template <class T>
T load_model(const std::filesystem::path& path) {
  try {
    return deserialize_model<T>(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace mediatopic
