// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "corlab/errors.hpp"

namespace corlab::io {

template <class U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    U out{};
    for (std::size_t i = 0; i < sizeof(U); ++i) out |= ((v >> (8 * i)) & 0xff) << (8 * (sizeof(U) - 1 - i));
    return out;
  }
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_u64(std::ostream& out, std::uint64_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void read_exact(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw Error("truncated binary stream");
}
inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  read_exact(in, &v, sizeof v);
  return to_little(v);
}
inline std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  read_exact(in, &v, sizeof v);
  return to_little(v);
}
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

}  // namespace corlab::io
