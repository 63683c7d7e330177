// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/diagnostics/landscape.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "corlab/common/format.hpp"
#include "corlab/common/random.hpp"
#include "corlab/errors.hpp"

namespace corlab::diag {

using optim::dot;
using optim::norm;

std::pair<std::vector<double>, std::vector<double>> landscape_directions(
    std::span<const double> w, std::span<const std::size_t> block_sizes, std::uint64_t seed) {
  const std::size_t p = w.size();
  std::vector<std::size_t> blocks(block_sizes.begin(), block_sizes.end());
  if (blocks.empty()) blocks.push_back(p);
  if (std::accumulate(blocks.begin(), blocks.end(), std::size_t{0}) != p) {
    throw ShapeError("landscape block sizes do not cover the parameter vector");
  }
  if (p < 2) throw ConfigError("landscape needs at least two parameters");
  Rng rng(derive_seed(seed, stream::landscape));
  std::normal_distribution<double> nd;
  std::vector<double> a(p);
  std::vector<double> b(p);
  for (auto& x : a) x = nd(rng);
  for (auto& x : b) x = nd(rng);
  const double na = norm(a);
  for (auto& x : a) x /= na;
  const double ab = dot(a, b);
  for (std::size_t i = 0; i < p; ++i) b[i] -= ab * a[i];
  const double nb = norm(b);
  for (auto& x : b) x /= nb;

  std::size_t off = 0;
  for (auto len : blocks) {
    const auto wb = w.subspan(off, len);
    const double nw = norm(wb);
    if (nw > 0.0) {
      for (auto* d : {&a, &b}) {
        const double nd_b = norm(std::span<const double>(d->data() + off, len));
        if (nd_b > 0.0) {
          for (std::size_t i = off; i < off + len; ++i) (*d)[i] *= nw / nd_b;
        }
      }
    }
    off += len;
  }
  return {a, b};
}

LandscapeGrid landscape_sample(const optim::Objective& obj, std::span<const double> w,
                               std::span<const std::size_t> block_sizes, double half_width,
                               std::size_t resolution, std::uint64_t seed) {
  if (resolution < 3 || resolution % 2 == 0) throw ConfigError("landscape resolution must be odd and >= 3");
  if (!(half_width > 0.0)) throw ConfigError("landscape half width must be positive");
  LandscapeGrid g;
  g.resolution = resolution;
  std::tie(g.direction_x, g.direction_y) = landscape_directions(w, block_sizes, seed);
  const double r1 = static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    // exact zero at the centre index
    g.coords.push_back(half_width * (2.0 * static_cast<double>(i) - r1) / r1);
  }
  const auto all = obj.all_samples();
  std::vector<double> q(w.size());
  g.loss.resize(resolution * resolution);
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const double x = g.coords[ix];
      const double y = g.coords[iy];
      for (std::size_t k = 0; k < w.size(); ++k) q[k] = w[k] + x * g.direction_x[k] + y * g.direction_y[k];
      double l = std::numeric_limits<double>::quiet_NaN();
      try {
        l = obj.loss(q, all);
      } catch (const Error&) {
        l = std::numeric_limits<double>::quiet_NaN();
      }
      if (!std::isfinite(l)) {
        l = std::numeric_limits<double>::quiet_NaN();
        ++g.non_finite;
      }
      g.loss[iy * resolution + ix] = l;
    }
  }
  return g;
}

void write_landscape_csv(std::ostream& out, const LandscapeGrid& grid) {
  out << "x,y,loss\n";
  for (std::size_t iy = 0; iy < grid.resolution; ++iy) {
    for (std::size_t ix = 0; ix < grid.resolution; ++ix) {
      out << fmt_real(grid.coords[ix]) << ',' << fmt_real(grid.coords[iy]) << ',' << fmt_real(grid.at(ix, iy))
          << '\n';
    }
  }
}

}  // namespace corlab::diag
