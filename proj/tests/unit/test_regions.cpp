// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "corlab/errors.hpp"
#include "corlab/regions/regions.hpp"

using corlab::ad::Matrix;
using corlab::ad::Shape;
namespace rg = corlab::regions;

namespace {

Matrix rows2(std::initializer_list<std::initializer_list<double>> r) { return Matrix::from_rows(r); }

Matrix random_field(std::mt19937_64& rng, std::size_t n, std::size_t d, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(Shape{n, d});
  for (auto& v : m.data()) v = nd(rng);
  return m;
}

}  // namespace

TEST(Regions, CgpIsCounterpartMinusOriginal) {
  const Matrix a = rows2({{1, 2}, {3, 4}});
  EXPECT_EQ(rg::compute_cgp(a, a), Matrix(Shape{2, 2}));
  const Matrix ones(Shape{2, 2}, 1.0);
  EXPECT_EQ(rg::compute_cgp(Matrix(Shape{2, 2}), ones), ones);

  std::mt19937_64 rng(4);
  const Matrix o = random_field(rng, 5, 3);
  const Matrix c = random_field(rng, 5, 3);
  const Matrix d = rg::compute_cgp(o, c);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(d(i, j), c(i, j) - o(i, j));
  }
  EXPECT_THROW(rg::compute_cgp(o, Matrix(Shape{4, 3})), corlab::ShapeError);
}

TEST(Regions, AnchorOfAlignedTokens) {
  const auto a = rg::anchor(rows2({{1, 0}, {1, 0}}), rg::RegionSpec{0, {0, 1}});
  EXPECT_EQ(a.centroid, (std::vector<double>{1, 0}));
  EXPECT_EQ(a.direction, (std::vector<double>{1, 0}));
  EXPECT_EQ(a.norm, 1.0);
}

TEST(Regions, AnchorCancellationGivesZeroDirection) {
  const Matrix f = rows2({{1, 0}, {-1, 0}});
  const auto a = rg::anchor(f, rg::RegionSpec{0, {0, 1}});
  EXPECT_EQ(a.norm, 0.0);
  EXPECT_EQ(a.direction, (std::vector<double>{0, 0}));
  const auto m = rg::refine_mask(f, a, rg::RegionSpec{0, {0, 1}}, 0.0);
  EXPECT_EQ(m, (std::vector<std::uint8_t>{0, 0}));
  EXPECT_EQ(rg::pool(f, m), (std::vector<double>{0.0, 0.0}));
}

TEST(Regions, AnchorHandComputed) {
  const Matrix f = rows2({{3, 0}, {1, 0}, {2, 2}});
  const auto a = rg::anchor(f, rg::RegionSpec{0, {0, 1, 2}});
  // c = (6/3, 2/3), |c| = sqrt(4 + 4/9) = sqrt(40)/3
  const double norm = std::sqrt(40.0) / 3.0;
  EXPECT_DOUBLE_EQ(a.centroid[0], 2.0);
  EXPECT_DOUBLE_EQ(a.centroid[1], 2.0 / 3.0);
  EXPECT_NEAR(a.norm, norm, 1e-15);
  EXPECT_NEAR(a.direction[0], 2.0 / norm, 1e-15);
  EXPECT_NEAR(a.direction[1], (2.0 / 3.0) / norm, 1e-15);
  EXPECT_THROW(rg::anchor(f, rg::RegionSpec{0, {}}), corlab::ConfigError);
}

TEST(Regions, MaskSelectsAlignedTokens) {
  const Matrix f = rows2({{1, 0}, {1, 0}, {1, 0}});
  const rg::RegionSpec r{0, {0, 1, 2}};
  EXPECT_EQ(rg::refine_mask(f, rg::anchor(f, r), r, 0.1), (std::vector<std::uint8_t>{1, 1, 1}));
}

TEST(Regions, MaskRespectsSpatialConstraint) {
  const Matrix f = rows2({{1, 0}, {1, 0}, {1000, 0}});
  const rg::RegionSpec r{0, {0, 1}};
  const auto m = rg::refine_mask(f, rg::anchor(f, r), r, 0.1);
  EXPECT_EQ(m, (std::vector<std::uint8_t>{1, 1, 0}));
}

TEST(Regions, MaskMatchesBruteForceFormula) {
  const Matrix f = rows2({{3, 0}, {1, 0}, {2, 2}});
  const rg::RegionSpec r{0, {0, 1, 2}};
  const double alpha = 0.9;
  const auto m = rg::refine_mask(f, rg::anchor(f, r), r, alpha);
  // Independent evaluation from c = (2, 2/3).
  const double cx = 2.0;
  const double cy = 2.0 / 3.0;
  const double cn = std::hypot(cx, cy);
  for (std::size_t i = 0; i < 3; ++i) {
    const double proj = (f(i, 0) * cx + f(i, 1) * cy) / cn;
    EXPECT_EQ(m[i], proj > alpha * cn ? 1 : 0) << "token " << i;
  }
  // 3*2/cn = 2.846, 1*2/cn = 0.949, (4 + 4/3)/cn = 2.530 against 0.9 * 2.108 = 1.897
  EXPECT_EQ(m, (std::vector<std::uint8_t>{1, 0, 1}));
}

TEST(Regions, StrictThreshold) {
  // Projection exactly equal to alpha * |c| is excluded.
  const Matrix f = rows2({{1, 0}, {1, 0}});
  const rg::RegionSpec r{0, {0, 1}};
  EXPECT_EQ(rg::refine_mask(f, rg::anchor(f, r), r, 1.0), (std::vector<std::uint8_t>{0, 0}));
  EXPECT_THROW(rg::refine_mask(f, rg::anchor(f, r), r, -0.1), corlab::ConfigError);
}

TEST(Regions, PoolExamples) {
  const Matrix v = rows2({{4, 4}, {2, 0}, {0, 2}});
  EXPECT_EQ(rg::pool(v, std::vector<std::uint8_t>{0, 0, 0}), (std::vector<double>{0, 0}));
  const auto one = rg::pool(v, std::vector<std::uint8_t>{1, 0, 0}, 1e-6);
  EXPECT_NEAR(one[0], 4.0, 4e-6);
  EXPECT_NEAR(one[1], 4.0, 4e-6);
  const auto two = rg::pool(v, std::vector<std::uint8_t>{0, 1, 1}, 1e-6);
  EXPECT_NEAR(two[0], 1.0, 1e-6);
  EXPECT_NEAR(two[1], 1.0, 1e-6);
  EXPECT_THROW(rg::pool(v, std::vector<std::uint8_t>{1, 0, 0}, 0.0), corlab::ConfigError);
}

TEST(Regions, DefaultPartitionOfFourByFour) {
  const auto parts = rg::default_partition(4);
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].indices, (std::vector<std::size_t>{5, 6, 9, 10}));
  EXPECT_EQ(parts[1].indices, (std::vector<std::size_t>{1, 2, 4, 7, 8, 11, 13, 14}));
  EXPECT_EQ(parts[2].indices, (std::vector<std::size_t>{0, 3, 12, 15}));
  EXPECT_NO_THROW(rg::validate_regions(parts, 16));
  EXPECT_THROW(rg::validate_regions(parts, 15), corlab::ConfigError);
  std::vector<rg::RegionSpec> overlap{{0, {1, 2}}, {1, {2, 3}}};
  EXPECT_THROW(rg::validate_regions(overlap, 4), corlab::ConfigError);
  EXPECT_NO_THROW(rg::validate_regions(overlap, 4, true));
}

TEST(Regions, SpatialAbsolutenessProperty) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ua(0.0, 2.0);
  const auto parts = rg::default_partition(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix f = random_field(rng, 16, 6, 3.0);
    const double alpha = ua(rng);
    for (const auto& r : parts) {
      const auto m = rg::refine_mask(f, rg::anchor(f, r), r, alpha);
      for (std::size_t i = 0; i < 16; ++i) {
        const bool inside = std::find(r.indices.begin(), r.indices.end(), i) != r.indices.end();
        if (!inside) EXPECT_EQ(m[i], 0);
      }
    }
  }
}

TEST(Regions, MonotoneMaskShrinkage) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ua(0.0, 1.5);
  const rg::RegionSpec r{0, {0, 1, 2, 3, 4, 5, 6, 7}};
  for (int trial = 0; trial < 200; ++trial) {
    Matrix f = random_field(rng, 8, 4);
    for (std::size_t i = 0; i < 8; ++i) f(i, 0) += 1.0;
    const auto anc = rg::anchor(f, r);
    double a1 = ua(rng);
    double a2 = ua(rng);
    if (a1 > a2) std::swap(a1, a2);
    const auto m1 = rg::refine_mask(f, anc, r, a1);
    const auto m2 = rg::refine_mask(f, anc, r, a2);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_LE(m2[i], m1[i]);
  }
}

TEST(Regions, TranslationCovariance) {
  std::mt19937_64 rng(29);
  const Matrix v = random_field(rng, 6, 3);
  const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0, 0};
  const std::vector<double> shift{0.5, -2.0, 3.0};
  Matrix w = v;
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t c = 0; c < 3; ++c) w(i, c) += shift[c];
  }
  const auto a = rg::pool(v, mask);
  const auto b = rg::pool(w, mask);
  // The 1e-6 in the denominator shrinks the shift by m / (m + eps).
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(b[c] - a[c], shift[c], 1e-5);
}

TEST(Regions, PooledVarianceShrinksAsOneOverM) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd(0.7, 1.3);
  const std::size_t d = 4;
  for (std::size_t m : {2u, 4u, 8u}) {
    const std::size_t trials = 10000;
    std::vector<double> sum(d, 0.0);
    std::vector<double> sq(d, 0.0);
    std::vector<double> token_sq(d, 0.0);
    std::vector<double> token_sum(d, 0.0);
    std::vector<std::uint8_t> mask(m, 1);
    for (std::size_t t = 0; t < trials; ++t) {
      Matrix f(Shape{m, d});
      for (auto& v : f.data()) v = nd(rng);
      const auto r = rg::pool(f, mask);
      for (std::size_t c = 0; c < d; ++c) {
        sum[c] += r[c];
        sq[c] += r[c] * r[c];
        token_sum[c] += f(0, c);
        token_sq[c] += f(0, c) * f(0, c);
      }
    }
    for (std::size_t c = 0; c < d; ++c) {
      const double n = static_cast<double>(trials);
      const double var_pool = sq[c] / n - (sum[c] / n) * (sum[c] / n);
      const double var_token = token_sq[c] / n - (token_sum[c] / n) * (token_sum[c] / n);
      const double ratio = var_pool / var_token;
      EXPECT_GE(ratio, 0.5 / static_cast<double>(m));
      EXPECT_LE(ratio, 2.0 / static_cast<double>(m));
    }
  }
}

TEST(Regions, MaskCsvLayout) {
  rg::RefinementMask m{2, 3, {1, 0, 0, 0, 1, 1}};
  std::ostringstream os;
  rg::write_mask_csv(os, std::vector<rg::RefinementMask>{m});
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "layer,region,token,bit");
  EXPECT_NE(s.find("1,1,2,1\n"), std::string::npos);
  EXPECT_NE(s.find("1,0,1,0\n"), std::string::npos);
}
