// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "corlab/autodiff/engine.hpp"

namespace ad = corlab::ad;
using ad::Matrix;
using ad::ParamVector;
using ad::Tape;
using ad::Var;

namespace {

// f(w) = w^T w with w a column block.
struct SquaredNorm {
  template <class S>
  Var operator()(Tape<S>& t, std::span<const Var> b, Var) const {
    return t.sum(t.mul(b[0], b[0]));
  }
};

struct SumOf {
  template <class S>
  Var operator()(Tape<S>& t, std::span<const Var> b, Var) const {
    return t.sum(b[0]);
  }
};

// Ignores its parameters entirely.
struct ConstantProgram {
  template <class S>
  Var operator()(Tape<S>& t, std::span<const Var>, Var in) const {
    return t.sum(in);
  }
};

// 0.5 w^T diag(d) w, with d passed as the input column.
struct DiagQuadratic {
  template <class S>
  Var operator()(Tape<S>& t, std::span<const Var> b, Var d) const {
    return t.scale(t.sum(t.mul(d, t.mul(b[0], b[0]))), 0.5);
  }
};

struct ReluSum {
  template <class S>
  Var operator()(Tape<S>& t, std::span<const Var> b, Var) const {
    return t.sum(t.relu(b[0]));
  }
};


// Softmax regression: logits = X W + b, mean NLL.
struct SoftmaxRegression {
  std::vector<std::size_t> labels;
  template <class S>
  Var operator()(Tape<S>& t, std::span<const Var> b, Var x) const {
    return t.softmax_nll(t.add_row(t.matmul(x, b[0]), b[1]), labels);
  }
};

// Exercises every smooth primitive at once.
struct Mixed {
  std::vector<double> labels;
  template <class S>
  Var operator()(Tape<S>& t, std::span<const Var> b, Var x) const {
    Var h = t.layer_norm_rows(t.matmul(x, b[0]), b[1], b[2], 1e-5);
    h = t.gelu(h);
    Var a = t.softmax_rows(t.matmul(h, t.transpose(h)));
    Var z = t.matmul(t.matmul(a, h), b[3]);
    Var extra = t.gather_rows(t.gather_cols(h, {0, 2}), {1, 0});
    Var cat = t.concat_rows({t.concat_cols({extra, extra}), h});
    return t.add(t.bce_with_logits(z, labels), t.scale(t.mean(t.mul(cat, cat)), 0.1));
  }
};

struct Combo {
  Mixed f, g;
  double a, b;
  template <class S>
  Var operator()(Tape<S>& t, std::span<const Var> bl, Var in) const {
    return t.add(t.scale(f(t, bl, in), a), t.scale(g(t, bl, in), b));
  }
};

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(ad::Shape{r, c});
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = n(rng);
  return m;
}

ParamVector mixed_params(std::mt19937_64& rng) {
  ParamVector p;
  p.add("w_in", random_matrix(rng, 3, 4, 0.5));
  p.add("gamma", random_matrix(rng, 1, 4, 0.3));
  p.add("beta", random_matrix(rng, 1, 4, 0.3));
  p.add("w_out", random_matrix(rng, 4, 1, 0.5));
  return p;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Autodiff, SquaredNormValueAndGradient) {
  ParamVector p;
  p.add("w", Matrix::column(std::vector<double>{1.0, 2.0}));
  const auto vg = ad::value_and_gradient(SquaredNorm{}, p, Matrix::scalar(0.0));
  EXPECT_EQ(vg.value, 5.0);
  ASSERT_EQ(vg.gradient.size(), 2u);
  EXPECT_EQ(vg.gradient[0], 2.0);
  EXPECT_EQ(vg.gradient[1], 4.0);
}

TEST(Autodiff, SumOfZeros) {
  ParamVector p;
  p.add("w", Matrix(ad::Shape{3, 1}));
  EXPECT_EQ(ad::evaluate(SumOf{}, p, Matrix::scalar(0.0))[0], 0.0);
}

TEST(Autodiff, ConstantHasZeroGradient) {
  ParamVector p;
  p.add("w", Matrix::column(std::vector<double>{1.0, -3.0}));
  const auto vg = ad::value_and_gradient(ConstantProgram{}, p, Matrix::scalar(7.0));
  EXPECT_EQ(vg.value, 7.0);
  for (double g : vg.gradient) EXPECT_EQ(g, 0.0);
}

TEST(Autodiff, FrozenBlocksAreExcluded) {
  ParamVector p;
  p.add("frozen", Matrix::column(std::vector<double>{1.0, 1.0, 1.0}), true);
  p.add("w", Matrix::column(std::vector<double>{0.5}));
  EXPECT_EQ(p.dim(), 1u);
  EXPECT_EQ(p.flatten().size(), 1u);
  EXPECT_THROW((void)p.offset(0), corlab::ConfigError);
}

TEST(Autodiff, FlattenRoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  auto p = mixed_params(rng);
  const auto flat = p.flatten();
  ParamVector q = p;
  q.unflatten(flat);
  EXPECT_EQ(q.flatten(), flat);
  EXPECT_THROW(q.unflatten(std::vector<double>(flat.size() + 1)), corlab::ShapeError);
}

TEST(Autodiff, HvpOfDiagonalQuadratic) {
  ParamVector p;
  p.add("w", Matrix::column(std::vector<double>{0.3, -0.7}));
  const Matrix d = Matrix::column(std::vector<double>{3.0, 1.0});
  const auto h1 = ad::hvp(DiagQuadratic{}, p, d, std::vector<double>{1.0, 0.0});
  const auto h2 = ad::hvp(DiagQuadratic{}, p, d, std::vector<double>{0.0, 1.0});
  EXPECT_EQ(h1, (std::vector<double>{3.0, 0.0}));
  EXPECT_EQ(h2, (std::vector<double>{0.0, 1.0}));
  EXPECT_THROW(ad::hvp(DiagQuadratic{}, p, d, std::vector<double>{0.0, 0.0}), corlab::ConfigError);
  EXPECT_THROW(ad::hvp(DiagQuadratic{}, p, d, std::vector<double>{1.0}), corlab::ShapeError);
}

TEST(Autodiff, HvpMatchesDenseFiniteDifferenceHessian) {
  std::mt19937_64 rng(11);
  const Matrix x = random_matrix(rng, 4, 3);
  const SoftmaxRegression prog{{0, 2, 1, 2}};
  ParamVector p;
  p.add("W", random_matrix(rng, 3, 3, 0.4));
  p.add("b", random_matrix(rng, 1, 3, 0.4));
  const std::size_t n = p.dim();

  // Dense Hessian from central differences of the analytic gradient.
  const double h = 1e-5;
  std::vector<std::vector<double>> H(n, std::vector<double>(n));
  auto flat = p.flatten();
  ParamVector probe = p;
  for (std::size_t j = 0; j < n; ++j) {
    const double orig = flat[j];
    flat[j] = orig + h;
    probe.unflatten(flat);
    const auto gp = ad::value_and_gradient(prog, probe, x).gradient;
    flat[j] = orig - h;
    probe.unflatten(flat);
    const auto gm = ad::value_and_gradient(prog, probe, x).gradient;
    flat[j] = orig;
    for (std::size_t i = 0; i < n; ++i) H[i][j] = (gp[i] - gm[i]) / (2 * h);
  }
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& e : v) e = nd(rng);
  const auto hv = ad::hvp(prog, p, x, v);
  std::vector<double> ref(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) ref[i] = dot(H[i], v);
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff += (hv[i] - ref[i]) * (hv[i] - ref[i]);
    norm += ref[i] * ref[i];
  }
  EXPECT_LT(std::sqrt(diff / norm), 1e-8);
}

TEST(Autodiff, GradCheckQuadraticIsExact) {
  ParamVector p;
  p.add("w", Matrix::column(std::vector<double>{1.5, -0.25, 2.0}));
  const auto r = ad::grad_check(SquaredNorm{}, p, Matrix::scalar(0.0), 1e-4);
  EXPECT_LT(r.max_rel_error(), 1e-9);
}

TEST(Autodiff, GradCheckZeroGradientUsesAbsoluteFallback) {
  ParamVector p;
  p.add("w", Matrix(ad::Shape{3, 1}));
  const auto r = ad::grad_check(SquaredNorm{}, p, Matrix::scalar(0.0), 1e-4);
  ASSERT_EQ(r.blocks.size(), 1u);
  EXPECT_TRUE(r.blocks[0].used_abs_fallback);
  EXPECT_LT(r.blocks[0].max_abs_error, 1e-9);
  EXPECT_THROW(ad::grad_check(SquaredNorm{}, p, Matrix::scalar(0.0), 0.0), corlab::ConfigError);
  EXPECT_THROW(ad::grad_check(SquaredNorm{}, p, Matrix::scalar(0.0), 0.1), corlab::ConfigError);
}

TEST(Autodiff, GradCheckAllPrimitives) {
  std::mt19937_64 rng(5);
  const Mixed prog{{1.0, 0.0, 1.0}};
  const auto p = mixed_params(rng);
  const Matrix x = random_matrix(rng, 3, 3);
  const auto r = ad::grad_check(prog, p, x, 1e-5);
  EXPECT_LT(r.max_norm_rel_error(), 1e-7);
}

TEST(Autodiff, BackwardIsLinear) {
  std::mt19937_64 rng(21);
  const auto p = mixed_params(rng);
  const Matrix x = random_matrix(rng, 3, 3);
  const Mixed f{{1.0, 0.0, 1.0}};
  const Mixed g{{0.0, 0.0, 1.0}};
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double a = u(rng);
  const double b = u(rng);
  const auto gc = ad::value_and_gradient(Combo{f, g, a, b}, p, x).gradient;
  const auto gf = ad::value_and_gradient(f, p, x).gradient;
  const auto gg = ad::value_and_gradient(g, p, x).gradient;
  for (std::size_t i = 0; i < gc.size(); ++i) {
    EXPECT_NEAR(gc[i], a * gf[i] + b * gg[i], 1e-12 * (1.0 + std::abs(gc[i])));
  }
}

TEST(Autodiff, HvpIsSymmetric) {
  std::mt19937_64 rng(8);
  const auto p = mixed_params(rng);
  const Matrix x = random_matrix(rng, 3, 3);
  const Mixed prog{{1.0, 1.0, 0.0}};
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> u(p.dim());
    std::vector<double> v(p.dim());
    for (auto& e : u) e = nd(rng);
    for (auto& e : v) e = nd(rng);
    const double vhu = dot(v, ad::hvp(prog, p, x, u));
    const double uhv = dot(u, ad::hvp(prog, p, x, v));
    EXPECT_NEAR(vhu, uhv, 1e-10);
  }
}

TEST(Autodiff, Deterministic) {
  std::mt19937_64 r1(99);
  std::mt19937_64 r2(99);
  const auto p1 = mixed_params(r1);
  const auto p2 = mixed_params(r2);
  const Matrix x1 = random_matrix(r1, 3, 3);
  const Matrix x2 = random_matrix(r2, 3, 3);
  const Mixed prog{{1.0, 0.0, 0.0}};
  const auto a = ad::value_and_gradient(prog, p1, x1);
  const auto b = ad::value_and_gradient(prog, p2, x2);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.gradient, b.gradient);
  std::vector<double> v(p1.dim(), 0.5);
  EXPECT_EQ(ad::hvp(prog, p1, x1, v), ad::hvp(prog, p2, x2, v));
}

TEST(Autodiff, ConsumeOnceTape) {
  ParamVector p;
  p.add("w", Matrix::column(std::vector<double>{1.0, 2.0}));
  auto fr = ad::forward(SquaredNorm{}, p, Matrix::scalar(0.0), true);
  (void)ad::backward(fr, Matrix::scalar(1.0));
  EXPECT_THROW((void)ad::backward(fr, Matrix::scalar(1.0)), corlab::TapeConsumedError);

  auto fr2 = ad::forward(SquaredNorm{}, p, Matrix::scalar(0.0));
  const auto g1 = ad::backward(fr2, Matrix::scalar(1.0));
  const auto g2 = ad::backward(fr2, Matrix::scalar(1.0));
  EXPECT_EQ(g1, g2);
  EXPECT_THROW((void)ad::backward(fr2, Matrix(ad::Shape{2, 1})), corlab::ShapeError);
}

TEST(Autodiff, NonFiniteIsReportedWithNode) {
  Tape<double> t;
  Var a = t.constant(Matrix::scalar(1e308));
  try {
    (void)t.scale(a, 10.0);
    FAIL() << "expected NonFiniteError";
  } catch (const corlab::NonFiniteError& e) {
    EXPECT_EQ(e.node(), 1u);
    EXPECT_EQ(e.op(), "scale");
  }
}

TEST(Autodiff, ReluRejectedByHvp) {
  ParamVector p;
  p.add("w", Matrix::column(std::vector<double>{1.0, -1.0}));
  try {
    (void)ad::hvp(ReluSum{}, p, Matrix::scalar(0.0), std::vector<double>{1.0, 1.0});
    FAIL() << "expected NotTwiceDifferentiableError";
  } catch (const corlab::NotTwiceDifferentiableError& e) {
    EXPECT_EQ(e.op(), "relu");
  }
}

TEST(Autodiff, ShapeMismatchThrows) {
  Tape<double> t;
  Var a = t.constant(Matrix(ad::Shape{2, 3}));
  Var b = t.constant(Matrix(ad::Shape{2, 3}));
  EXPECT_THROW(t.matmul(a, b), corlab::ShapeError);
  EXPECT_THROW(Matrix(ad::Shape{0, 3}), corlab::ShapeError);
}
