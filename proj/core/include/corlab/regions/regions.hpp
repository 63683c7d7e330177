// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corlab/autodiff/tensor.hpp"

namespace corlab::regions {

using ad::Matrix;

enum class RegionLabel { foreground, boundary, background, custom };

std::string_view to_string(RegionLabel label);
RegionLabel region_label_from_string(std::string_view s);

/// One region N_k of the visual token grid. Indices are 0-based.
struct RegionSpec {
  std::size_t id{0};
  std::vector<std::size_t> indices;
  RegionLabel label{RegionLabel::custom};
};

/// Checks indices < n_tokens, nonempty, no duplicates; throws ConfigError.
void validate_regions(std::span<const RegionSpec> regions, std::size_t n_tokens,
                      bool allow_overlap = false);

/// Default 3-way split of a side x side grid: inner block foreground, the
/// remaining edge tokens boundary, the four corners background. Needs side >= 3.
std::vector<RegionSpec> default_partition(std::size_t side);

/// Tokens of the region carrying `label` in the default partition.
RegionSpec default_region(std::size_t side, RegionLabel label);

struct RegionAnchor {
  std::vector<double> centroid;   // c_k
  std::vector<double> direction;  // d_k, zero vector when norm == 0
  double norm{0.0};               // ||c_k||
};

/// Delta v = counterpart - orig.
Matrix compute_cgp(const Matrix& orig, const Matrix& counterpart);

RegionAnchor anchor(const Matrix& cgp, const RegionSpec& region);

/// Row k of the refinement mask: 1 iff i in N_k and <dv_i, d_k> > alpha * ||c_k||.
std::vector<std::uint8_t> refine_mask(const Matrix& cgp, const RegionAnchor& anc,
                                      const RegionSpec& region, double alpha);

/// r_k = sum_i M_i v_i / (sum_i M_i + eps).
std::vector<double> pool(const Matrix& visuals, std::span<const std::uint8_t> mask_row,
                         double eps = 1e-6);

inline constexpr double kPoolEpsilon = 1e-6;

/// Binary K x N mask for one layer.
struct RefinementMask {
  std::size_t regions{0};
  std::size_t tokens{0};
  std::vector<std::uint8_t> bits;  // row-major K x N

  [[nodiscard]] std::uint8_t at(std::size_t k, std::size_t i) const { return bits[k * tokens + i]; }
  [[nodiscard]] std::span<const std::uint8_t> row(std::size_t k) const {
    return std::span<const std::uint8_t>(bits).subspan(k * tokens, tokens);
  }
};

/// Writes "layer,region,token,bit" rows. Layers are numbered from 1.
void write_mask_csv(std::ostream& out, std::span<const RefinementMask> per_layer,
                    bool header = true);

}  // namespace corlab::regions
