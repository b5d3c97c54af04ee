#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ecgli/common.hpp"

namespace ecgli::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
  requires std::is_trivially_copyable_v<T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
void write_array(std::ostream& out, std::span<const T> values) {
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw CorruptData("unexpected end of binary stream");
  return value;
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
std::vector<T> read_array(std::istream& in, std::size_t count) {
  // Guard against absurd header values before allocating.
  constexpr std::size_t kMaxBytes = std::size_t{1} << 34;
  if (count > kMaxBytes / sizeof(T)) throw CorruptData("array length in header is implausible");
  std::vector<T> values(count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw CorruptData("binary stream shorter than its header declares");
  return values;
}

inline void write_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), 8); }

inline void expect_magic(std::istream& in, std::string_view magic) {
  char buf[8]{};
  in.read(buf, 8);
  if (!in || std::string_view(buf, 8) != magic.substr(0, 8)) {
    throw CorruptData("bad magic, expected " + std::string(magic.substr(0, 8)));
  }
}

/// FNV-1a over raw bytes; used as the dataset/model checksum.
inline std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t h = 1469598103934665603ULL) {
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
std::uint64_t fnv1a_of(std::span<const T> values, std::uint64_t h = 1469598103934665603ULL) {
  return fnv1a(std::as_bytes(values), h);
}

}  // namespace ecgli::io
