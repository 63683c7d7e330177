// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "corlab/optim/objective.hpp"

namespace corlab::diag {

struct LandscapeGrid {
  std::size_t resolution{0};
  std::vector<double> coords;          // shared x and y axis values
  std::vector<double> loss;            // row-major, loss[iy * res + ix]
  std::vector<double> direction_x;
  std::vector<double> direction_y;
  std::size_t non_finite{0};

  [[nodiscard]] double at(std::size_t ix, std::size_t iy) const { return loss[iy * resolution + ix]; }
};

/// Two seeded Gaussian directions, Gram-Schmidt orthonormalised, then each
/// parameter block rescaled to the norm of the matching block of w (blocks
/// whose parameters are all zero keep the orthonormalised entries).
std::pair<std::vector<double>, std::vector<double>> landscape_directions(
    std::span<const double> w, std::span<const std::size_t> block_sizes, std::uint64_t seed);

/// Full-data loss on w + x d1 + y d2 for x, y in [-half_width, half_width].
/// Non-finite cells are stored as NaN and counted.
LandscapeGrid landscape_sample(const optim::Objective& obj, std::span<const double> w,
                               std::span<const std::size_t> block_sizes, double half_width,
                               std::size_t resolution, std::uint64_t seed);

void write_landscape_csv(std::ostream& out, const LandscapeGrid& grid);

}  // namespace corlab::diag
