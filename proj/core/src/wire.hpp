#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "atnatlas/errors.hpp"

namespace atnatlas::detail {

// Explicit little-endian framing so files are bit-identical across hosts.
inline void store_f64_le(double v, unsigned char* out) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(bits >> (8 * i));
}

inline double load_f64_le(const unsigned char* in) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

inline void append_f64_le(std::string& out, const double* v, std::size_t n) {
  const std::size_t base = out.size();
  out.resize(base + 8 * n);
  auto* dst = reinterpret_cast<unsigned char*>(out.data() + base);
  for (std::size_t i = 0; i < n; ++i) store_f64_le(v[i], dst + 8 * i);
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace atnatlas::detail
