// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "corlab/diagnostics/cor.hpp"
#include "corlab/diagnostics/landscape.hpp"
#include "corlab/diagnostics/spectral.hpp"
#include "corlab/errors.hpp"
#include "corlab/optim/objective.hpp"
#include "unit/diag_oracle.hpp"

using corlab::ad::Matrix;
using corlab::ad::Shape;
namespace dg = corlab::diag;
namespace op = corlab::optim;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix to_matrix(const oracle::Dense& d) {
  Matrix m(Shape{d.size(), d.front().size()});
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d[i].size(); ++j) m(i, j) = d[i][j];
  return m;
}

oracle::SoftmaxInstance random_softmax(std::uint64_t seed, std::size_t n, std::size_t f, std::size_t c,
                                       double wscale = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  oracle::SoftmaxInstance s;
  s.classes = c;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(f);
    for (auto& v : row) v = nd(rng);
    s.x.push_back(row);
    s.y.push_back(i % c);
  }
  s.w.resize((f + 1) * c);
  for (auto& v : s.w) v = wscale * nd(rng);
  return s;
}

op::SoftmaxObjective objective_of(const oracle::SoftmaxInstance& s) {
  return op::SoftmaxObjective(to_matrix(s.x), s.y, s.classes);
}

}  // namespace

TEST(Gsnr, TwoSampleExample) {
  std::vector<std::vector<double>> g{{1.0, 0.0}, {3.0, 0.0}};
  // mean (2,0), population variance 1 -> 4 / 1
  EXPECT_DOUBLE_EQ(dg::gsnr(g, 1), 4.0);
  EXPECT_DOUBLE_EQ(dg::gsnr(g, 4), 16.0);
}

TEST(Gsnr, OpposedGradientsGiveZero) {
  std::vector<std::vector<double>> g{{1.0}, {-1.0}};
  EXPECT_DOUBLE_EQ(dg::gsnr(g, 1), 0.0);
}

TEST(Gsnr, Sentinels) {
  std::vector<std::vector<double>> same{{0.5, 2.0}, {0.5, 2.0}, {0.5, 2.0}};
  EXPECT_EQ(dg::gsnr(same, 5), kInf);
  std::vector<std::vector<double>> zero{{0.0}, {0.0}};
  EXPECT_EQ(dg::gsnr(zero, 5), 0.0);
}

TEST(Gsnr, ScaleInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> g(7, std::vector<double>(4));
  for (auto& r : g)
    for (auto& v : r) v = nd(rng) + 0.3;
  auto h = g;
  for (auto& r : h)
    for (auto& v : r) v *= -37.5;
  EXPECT_NEAR(dg::gsnr(g, 20), dg::gsnr(h, 20), 1e-12 * dg::gsnr(g, 20));
}

TEST(Gsnr, NeedsTwoRows) {
  std::vector<std::vector<double>> g{{1.0}};
  EXPECT_THROW((void)dg::gsnr(g, 1), corlab::Error);
}

TEST(PowerIteration, Diagonal) {
  const Matrix h = Matrix::from_rows({{3.0, 0.0}, {0.0, 1.0}});
  EXPECT_NEAR(dg::lambda_max(dg::matrix_oracle(h), 2), 3.0, 1e-8);
  Matrix eye(Shape{5, 5});
  for (std::size_t i = 0; i < 5; ++i) eye(i, i) = 1.0;
  EXPECT_NEAR(dg::lambda_max(dg::matrix_oracle(eye), 5), 1.0, 1e-12);
}

TEST(PowerIteration, IndefiniteUsesShiftedPass) {
  const Matrix h = Matrix::from_rows({{-5.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 1.0}});
  const auto r = dg::power_iteration(dg::matrix_oracle(h), 3, 2000, 1e-12, 1);
  EXPECT_NE(r.shift, 0.0);
  EXPECT_NEAR(r.lambda_max, 2.0, 1e-6);
}

TEST(PowerIteration, BudgetExhaustionThrows) {
  const Matrix h = Matrix::from_rows({{1.0, 0.0}, {0.0, 0.999}});
  EXPECT_THROW((void)dg::lambda_max(dg::matrix_oracle(h), 2, 2, 1e-15, 0), dg::NonConvergenceError);
  const auto r = dg::power_iteration(dg::matrix_oracle(h), 2, 2, 1e-15, 0);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.lambda_max, 1.0 + 1e-12);
}

TEST(PowerIteration, SoftmaxMatchesJacobi) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = random_softmax(100 + seed, 12, 4, 3);
    const auto obj = objective_of(inst);
    const auto ev = oracle::jacobi_eigenvalues(oracle::softmax_hessian(inst));
    const double got = dg::lambda_max(dg::hvp_oracle(obj, inst.w), obj.dim(), 2000, 1e-14, seed);
    EXPECT_NEAR(got, ev.back(), 1e-6 * std::max(1.0, ev.back())) << "seed " << seed;
  }
}

TEST(Trace, IdentityIsExactUnderHutchinson) {
  Matrix eye(Shape{10, 10});
  for (std::size_t i = 0; i < 10; ++i) eye(i, i) = 1.0;
  const auto t = dg::hessian_trace(dg::matrix_oracle(eye), 10, 7, 5, dg::TraceMode::hutchinson);
  EXPECT_DOUBLE_EQ(t.mean, 10.0);
  EXPECT_DOUBLE_EQ(t.std_error, 0.0);
  EXPECT_FALSE(t.exact);
}

TEST(Trace, DenseFallbackBelowThreshold) {
  const auto inst = random_softmax(7, 10, 3, 2);
  const auto obj = objective_of(inst);
  const auto t = dg::hessian_trace(dg::hvp_oracle(obj, inst.w), obj.dim(), 30, 0);
  EXPECT_TRUE(t.exact);
  double want = 0.0;
  const auto h = oracle::softmax_hessian(inst);
  for (std::size_t i = 0; i < h.size(); ++i) want += h[i][i];
  EXPECT_NEAR(t.mean, want, 1e-10);
}

TEST(Trace, HutchinsonWishartWithinTwoPercent) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(9000 + seed);
    std::normal_distribution<double> nd;
    const std::size_t n = 50;
    const std::size_t m = 60;
    Matrix x(Shape{n, m});
    for (auto& v : x.data()) v = nd(rng);
    Matrix h(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) s += x(i, k) * x(j, k);
        h(i, j) = s / static_cast<double>(m);
      }
    double want = 0.0;
    for (std::size_t i = 0; i < n; ++i) want += h(i, i);
    const auto t = dg::hessian_trace(dg::matrix_oracle(h), n, 1000, seed, dg::TraceMode::hutchinson);
    if (std::abs(t.mean - want) <= 0.02 * want) ++hits;
  }
  EXPECT_GE(hits, 95);
}

TEST(Misspec, ArithmeticAndWellPosedness) {
  EXPECT_DOUBLE_EQ(dg::misspecification_trace(5.0, 4.0, 6.0), 3.0);
  EXPECT_DOUBLE_EQ(dg::misspecification_trace(0.0, 0.0, 16.0), -16.0);
  EXPECT_THROW((void)dg::misspecification_trace(-1.0, 0.0, 4.0), dg::WellPosednessError);
}

TEST(Misspec, SoftmaxMatchesDirectFormula) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = random_softmax(300 + seed, 8, 3, 3, 1.0);
    const auto obj = objective_of(inst);
    dg::SnapshotOptions opt;
    opt.batch_size = 1;
    opt.power_iters = 5000;
    const auto snap = dg::spectral_snapshot(obj, inst.w, 0, opt);
    EXPECT_TRUE(snap.exact);
    const double want = oracle::softmax_trace_xi(inst);
    EXPECT_NEAR(snap.trace_xi, want, 1e-10 * std::max(1.0, std::abs(want))) << "seed " << seed;
  }
}

TEST(StatisticalTerm, Values) {
  EXPECT_NEAR(dg::statistical_term(1.0), 0.70710678118654752, 1e-15);
  EXPECT_EQ(dg::statistical_term(kInf), 1.0);
  EXPECT_EQ(dg::statistical_term(0.0), 0.0);
  const double r = dg::statistical_term(1e-4) / std::sqrt(1e-4);
  EXPECT_GE(r, 0.99995);
  EXPECT_LE(r, 1.0);
  EXPECT_THROW((void)dg::statistical_term(-1e-3), corlab::ConfigError);
}

TEST(StatisticalTerm, Monotone) {
  double prev = -1.0;
  for (double s = 0.0; s < 1e4; s = s * 1.7 + 1e-3) {
    const double f = dg::statistical_term(s);
    EXPECT_GT(f, prev);
    EXPECT_LT(f, 1.0);
    prev = f;
  }
}

TEST(Decomposition, ConstructedQuantities) {
  dg::SpectralEstimate s;
  s.lambda_max = 2.0;
  s.trace_h = 5.0;
  s.kappa_s = 2.5;
  s.grad_norm_sq = 0.09;
  s.trace_cov = 0.6;
  s.trace_xi = s.trace_cov + s.grad_norm_sq - s.trace_h;
  s.gsnr = s.grad_norm_sq / s.trace_cov;
  const auto d = dg::verify_decomposition(s);
  EXPECT_NEAR(d.lhs, 0.15, 1e-15);
  EXPECT_NEAR(d.geometric, 2.5 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(d.rhs, d.lhs, 1e-14);
  EXPECT_LT(d.rel_gap, 1e-12);
}

TEST(Decomposition, InfiniteGsnr) {
  dg::SpectralEstimate s;
  s.lambda_max = 1.0;
  s.trace_h = 3.0;
  s.grad_norm_sq = 0.25;
  s.trace_cov = 0.0;
  s.trace_xi = 0.25 - 3.0;
  s.gsnr = kInf;
  const auto d = dg::verify_decomposition(s);
  EXPECT_EQ(d.statistical, 1.0);
  EXPECT_NEAR(d.rhs, 0.5, 1e-15);
}

TEST(Decomposition, RejectsNonPositiveTrace) {
  dg::SpectralEstimate s;
  s.lambda_max = 1.0;
  EXPECT_THROW((void)dg::verify_decomposition(s), corlab::NumericalError);
}

TEST(Decomposition, SoftmaxExactGap) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_softmax(500 + seed, 4, 3, 2, 0.8);
    const auto obj = objective_of(inst);
    dg::SnapshotOptions opt;
    opt.batch_size = 1;
    opt.power_iters = 5000;
    opt.power_tol = 1e-15;
    opt.seed = seed;
    const auto snap = dg::spectral_snapshot(obj, inst.w, 0, opt);
    const auto d = dg::verify_decomposition(snap);
    EXPECT_LT(d.rel_gap, 1e-6) << "seed " << seed;
  }
}

TEST(Decomposition, DuplicatedSamplesGiveUnitStatisticalTerm) {
  auto inst = random_softmax(41, 1, 3, 3, 0.8);
  inst.x.push_back(inst.x[0]);
  inst.y.push_back(inst.y[0]);
  const auto obj = objective_of(inst);
  dg::SnapshotOptions opt;
  opt.batch_size = 1;
  opt.power_iters = 5000;
  opt.power_tol = 1e-15;
  const auto snap = dg::spectral_snapshot(obj, inst.w, 0, opt);
  EXPECT_EQ(snap.gsnr, kInf);
  const auto d = dg::verify_decomposition(snap);
  EXPECT_EQ(d.statistical, 1.0);
  EXPECT_NEAR(d.rhs, d.geometric * d.misspec, 1e-6 * d.rhs);
  EXPECT_LT(d.rel_gap, 1e-6);
}

TEST(Cor, TrajectoryExample) {
  std::vector<dg::CorPoint> pts{{1, 0.3, 1.0}, {2, 0.04, 1.0}, {3, 0.2, 1.0}};
  const auto r = dg::cor_trajectory(pts);
  EXPECT_DOUBLE_EQ(r.rho_critical, 0.04);
  EXPECT_EQ(r.argmin_step, 2u);
  EXPECT_TRUE(r.collapsed);
}

TEST(Cor, SingleStep) {
  std::vector<dg::CorPoint> pts{{0, 0.2, 2.0}};
  const auto r = dg::cor_trajectory(pts);
  EXPECT_DOUBLE_EQ(r.rho_critical, 0.1);
  EXPECT_FALSE(r.collapsed);
}

TEST(Cor, TiesAndExclusions) {
  std::vector<dg::CorPoint> pts{{0, 1.0, -1.0}, {1, 0.5, 1.0}, {2, 1.0, 2.0}, {3, 0.0, 0.0}};
  const auto r = dg::cor_trajectory(pts);
  EXPECT_EQ(r.excluded, 2u);
  EXPECT_EQ(r.argmin_step, 1u);
  EXPECT_TRUE(std::isnan(r.bounds[0]));
  std::vector<dg::CorPoint> bad{{0, 1.0, 0.0}};
  EXPECT_THROW((void)dg::cor_trajectory(bad), corlab::ConfigError);
}

TEST(Cor, QuadraticGradientDescentClosedForm) {
  // l(w) = 0.5 * 4 w^2: GD with lr 0.1 gives w_t = 0.6^t w_0, bound = |4 w_t| / 4.
  const op::QuadraticObjective q(Matrix::scalar(4.0), Matrix(Shape{1, 1}));
  std::vector<double> w{2.0};
  std::vector<dg::CorPoint> pts;
  const auto all = q.all_samples();
  for (std::size_t t = 0; t < 6; ++t) {
    const auto g = q.gradient(w, all);
    const double lam = dg::lambda_max(dg::hvp_oracle(q, w), 1);
    pts.push_back({t, op::norm(g), lam});
    w[0] -= 0.1 * g[0];
  }
  const auto r = dg::cor_trajectory(pts);
  for (std::size_t t = 0; t < 6; ++t) EXPECT_NEAR(r.bounds[t], 2.0 * std::pow(0.6, t), 1e-12);
  EXPECT_EQ(r.argmin_step, 5u);
}

TEST(Phase, PlateauRiseDecay) {
  std::vector<double> g;
  for (int t = 0; t < 50; ++t) g.push_back(0.01);
  for (int k = 1; k <= 20; ++k) g.push_back(0.01 + (1.0 - 0.01) * k / 20.0);
  for (int k = 1; k <= 30; ++k) g.push_back(1.0 - 0.5 * k / 30.0);
  const auto r = dg::phase_detect(g);
  ASSERT_TRUE(r.rise.has_value());
  ASSERT_TRUE(r.decay.has_value());
  EXPECT_NEAR(static_cast<double>(*r.rise), 50.0, 3.0);
  EXPECT_NEAR(static_cast<double>(*r.decay), 70.0, 3.0);
  EXPECT_LT(r.t_star, *r.rise);
  EXPECT_FALSE(r.collapse);
}

TEST(Phase, FlatTraceIsCollapse) {
  std::vector<double> g(30, 0.2);
  g[17] = 0.1;
  const auto r = dg::phase_detect(g);
  EXPECT_FALSE(r.rise.has_value());
  EXPECT_TRUE(r.collapse);
  EXPECT_EQ(r.t_star, 17u);
}

TEST(Phase, CorSelectsTStar) {
  std::vector<double> g(20, 0.5);
  std::vector<double> cor(20, 1.0);
  cor[3] = std::numeric_limits<double>::quiet_NaN();
  cor[6] = 0.2;
  const auto r = dg::phase_detect(g, cor);
  EXPECT_EQ(r.t_star, 6u);
  std::vector<double> shortg(9, 1.0);
  EXPECT_THROW((void)dg::phase_detect(shortg), corlab::ConfigError);
}

TEST(Landscape, QuadraticIsExactParaboloid) {
  const Matrix a = Matrix::from_rows({{3.0, 0.5, 0.0}, {0.5, 2.0, 0.1}, {0.0, 0.1, 1.0}});
  const Matrix anchors = Matrix::from_rows({{0.3, -0.2, 0.1}, {-0.1, 0.4, 0.2}});
  const op::QuadraticObjective q(a, anchors);
  const std::vector<double> w{0.5, -0.7, 1.1};
  const std::vector<std::size_t> blocks{2, 1};
  const auto g = dg::landscape_sample(q, w, blocks, 1.0, 9, 11);
  EXPECT_EQ(g.coords[4], 0.0);
  EXPECT_EQ(g.non_finite, 0u);
  // closed form along the plane
  const auto& d1 = g.direction_x;
  const auto& d2 = g.direction_y;
  const auto all = q.all_samples();
  const double l0 = q.loss(w, all);
  const auto gr = q.gradient(w, all);
  auto quad = [&](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) s += u[i] * a(i, j) * v[j];
    return s;
  };
  double worst = 0.0;
  for (std::size_t iy = 0; iy < 9; ++iy)
    for (std::size_t ix = 0; ix < 9; ++ix) {
      const double x = g.coords[ix];
      const double y = g.coords[iy];
      const double want = l0 + x * op::dot(gr, d1) + y * op::dot(gr, d2) + 0.5 * x * x * quad(d1, d1) +
                          x * y * quad(d1, d2) + 0.5 * y * y * quad(d2, d2);
      worst = std::max(worst, std::abs(g.at(ix, iy) - want));
    }
  EXPECT_LT(worst, 1e-10);
  // per-block scaling to ||w_b||
  EXPECT_NEAR(std::hypot(d1[0], d1[1]), std::hypot(w[0], w[1]), 1e-12);
  EXPECT_NEAR(std::abs(d2[2]), std::abs(w[2]), 1e-12);
}

TEST(Landscape, SymmetricQuadraticIsPointSymmetric) {
  const Matrix a = Matrix::from_rows({{2.0, 0.3}, {0.3, 1.0}});
  const Matrix anchors = Matrix::from_rows({{0.5, 0.2}, {-0.5, -0.2}});
  const op::QuadraticObjective q(a, anchors);
  const std::vector<double> w{0.0, 0.0};
  const auto g = dg::landscape_sample(q, w, {}, 2.0, 7, 3);
  for (std::size_t iy = 0; iy < 7; ++iy)
    for (std::size_t ix = 0; ix < 7; ++ix) EXPECT_NEAR(g.at(ix, iy), g.at(6 - ix, 6 - iy), 1e-12);
}

TEST(Landscape, ValidationAndCsv) {
  const op::QuadraticObjective q(Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}), Matrix(Shape{1, 2}));
  const std::vector<double> w{1.0, 1.0};
  EXPECT_THROW((void)dg::landscape_sample(q, w, {}, 1.0, 4, 0), corlab::ConfigError);
  EXPECT_THROW((void)dg::landscape_sample(q, w, {}, 0.0, 5, 0), corlab::ConfigError);
  const auto g = dg::landscape_sample(q, w, {}, 1.0, 3, 0);
  std::ostringstream os;
  dg::write_landscape_csv(os, g);
  const auto text = os.str();
  EXPECT_EQ(text.rfind("x,y,loss\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
}

TEST(ProbeObjective, ClosedFormPerSampleMatchesAutodiff) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  Matrix x(Shape{6, 4});
  for (auto& v : x.data()) v = nd(rng);
  const op::ProbeObjective obj(x, {0, 1, 0, 1, 1, 0});
  std::vector<double> w(obj.dim());
  for (auto& v : w) v = nd(rng);
  const auto all = obj.all_samples();
  const auto ps = obj.per_sample_gradients(w, all);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::size_t one[] = {i};
    const auto g = obj.gradient(w, one);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(ps[i][k], g[k], 1e-12);
  }
}
