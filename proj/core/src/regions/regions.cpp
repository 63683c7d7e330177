// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/regions/regions.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "corlab/errors.hpp"

namespace corlab::regions {

std::string_view to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::foreground: return "foreground";
    case RegionLabel::boundary: return "boundary";
    case RegionLabel::background: return "background";
    case RegionLabel::custom: return "custom";
  }
  return "custom";
}

RegionLabel region_label_from_string(std::string_view s) {
  if (s == "foreground") return RegionLabel::foreground;
  if (s == "boundary") return RegionLabel::boundary;
  if (s == "background") return RegionLabel::background;
  if (s == "custom") return RegionLabel::custom;
  throw ConfigError("unknown region label '" + std::string(s) + "'");
}

void validate_regions(std::span<const RegionSpec> regions, std::size_t n_tokens,
                      bool allow_overlap) {
  std::set<std::size_t> seen;
  for (const auto& r : regions) {
    if (r.indices.empty()) throw ConfigError("region " + std::to_string(r.id) + " is empty");
    std::set<std::size_t> local;
    for (auto i : r.indices) {
      if (i >= n_tokens) {
        throw ConfigError("region " + std::to_string(r.id) + " index " + std::to_string(i) +
                          " out of range for " + std::to_string(n_tokens) + " tokens");
      }
      if (!local.insert(i).second) {
        throw ConfigError("region " + std::to_string(r.id) + " repeats index " + std::to_string(i));
      }
      if (!allow_overlap && !seen.insert(i).second) {
        throw ConfigError("regions overlap at token " + std::to_string(i));
      }
    }
  }
}

std::vector<RegionSpec> default_partition(std::size_t side) {
  if (side < 3) throw ConfigError("default partition needs a grid side of at least 3");
  RegionSpec fg{0, {}, RegionLabel::foreground};
  RegionSpec bd{1, {}, RegionLabel::boundary};
  RegionSpec bg{2, {}, RegionLabel::background};
  const std::size_t last = side - 1;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const std::size_t idx = r * side + c;
      const bool edge_r = r == 0 || r == last;
      const bool edge_c = c == 0 || c == last;
      if (edge_r && edge_c) {
        bg.indices.push_back(idx);
      } else if (edge_r || edge_c) {
        bd.indices.push_back(idx);
      } else {
        fg.indices.push_back(idx);
      }
    }
  }
  return {fg, bd, bg};
}

RegionSpec default_region(std::size_t side, RegionLabel label) {
  for (auto& r : default_partition(side)) {
    if (r.label == label) return r;
  }
  throw ConfigError("no default region labelled " + std::string(to_string(label)));
}

Matrix compute_cgp(const Matrix& orig, const Matrix& counterpart) {
  if (orig.shape() != counterpart.shape()) {
    throw ShapeError("compute_cgp " + orig.shape().str() + " vs " + counterpart.shape().str());
  }
  Matrix d = counterpart;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= orig[i];
  return d;
}

RegionAnchor anchor(const Matrix& cgp, const RegionSpec& region) {
  if (region.indices.empty()) throw ConfigError("anchor of an empty region");
  const std::size_t dim = cgp.cols();
  RegionAnchor a;
  a.centroid.assign(dim, 0.0);
  for (auto i : region.indices) {
    if (i >= cgp.rows()) throw ConfigError("region index out of range");
    for (std::size_t c = 0; c < dim; ++c) a.centroid[c] += cgp(i, c);
  }
  const double m = static_cast<double>(region.indices.size());
  double sq = 0.0;
  for (auto& v : a.centroid) {
    v /= m;
    sq += v * v;
  }
  a.norm = std::sqrt(sq);
  a.direction.assign(dim, 0.0);
  if (a.norm > 0.0) {
    for (std::size_t c = 0; c < dim; ++c) a.direction[c] = a.centroid[c] / a.norm;
  }
  return a;
}

std::vector<std::uint8_t> refine_mask(const Matrix& cgp, const RegionAnchor& anc,
                                      const RegionSpec& region, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  std::vector<std::uint8_t> row(cgp.rows(), 0);
  if (anc.norm == 0.0) return row;
  const double threshold = alpha * anc.norm;
  for (auto i : region.indices) {
    double proj = 0.0;
    for (std::size_t c = 0; c < cgp.cols(); ++c) proj += cgp(i, c) * anc.direction[c];
    if (proj > threshold) row[i] = 1;
  }
  return row;
}

std::vector<double> pool(const Matrix& visuals, std::span<const std::uint8_t> mask_row,
                         double eps) {
  if (!(eps > 0.0)) throw ConfigError("pool epsilon must be > 0");
  if (mask_row.size() != visuals.rows()) throw ShapeError("pool mask length mismatch");
  std::vector<double> r(visuals.cols(), 0.0);
  double count = 0.0;
  for (std::size_t i = 0; i < visuals.rows(); ++i) {
    if (!mask_row[i]) continue;
    count += 1.0;
    for (std::size_t c = 0; c < visuals.cols(); ++c) r[c] += visuals(i, c);
  }
  for (auto& v : r) v /= (count + eps);
  return r;
}

void write_mask_csv(std::ostream& out, std::span<const RefinementMask> per_layer, bool header) {
  if (header) out << "layer,region,token,bit\n";
  for (std::size_t l = 0; l < per_layer.size(); ++l) {
    const auto& m = per_layer[l];
    for (std::size_t k = 0; k < m.regions; ++k) {
      for (std::size_t i = 0; i < m.tokens; ++i) {
        out << (l + 1) << ',' << k << ',' << i << ',' << static_cast<int>(m.at(k, i)) << '\n';
      }
    }
  }
}

}  // namespace corlab::regions
