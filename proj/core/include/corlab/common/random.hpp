// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace corlab {

using Rng = std::mt19937_64;

/// Child seed for a named sub-stream of `parent` (splitmix64 finaliser).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept {
  std::uint64_t z = parent + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream tags used across the library. Kept in one place so that no two
// components draw from the same sub-stream by accident.
namespace stream {
inline constexpr std::uint64_t encoder = 1;
inline constexpr std::uint64_t task_train = 2;
inline constexpr std::uint64_t task_test = 3;
inline constexpr std::uint64_t patterns = 4;
inline constexpr std::uint64_t counterpart = 5;
inline constexpr std::uint64_t batches = 6;
inline constexpr std::uint64_t probes = 7;
inline constexpr std::uint64_t landscape = 8;
inline constexpr std::uint64_t power_iteration = 9;
inline constexpr std::uint64_t instances = 10;
inline constexpr std::uint64_t monte_carlo = 11;
}  // namespace stream

}  // namespace corlab
