// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "corlab/autodiff/dual.hpp"
#include "corlab/autodiff/param_vector.hpp"
#include "corlab/autodiff/tape.hpp"
#include "corlab/autodiff/tensor.hpp"
#include "corlab/errors.hpp"

namespace corlab::ad {

/// A differentiable program: records itself on a tape given one Var per
/// parameter block (frozen blocks arrive as constants) and an input Var.
/// It must be instantiable for both double and Dual tapes.
template <class P>
concept Program = requires(const P& p, Tape<double>& t, Tape<Dual>& td,
                           std::span<const Var> blocks, Var input) {
  { p(t, blocks, input) } -> std::same_as<Var>;
  { p(td, blocks, input) } -> std::same_as<Var>;
};

struct ForwardResult {
  Matrix output;
  Tape<double> tape;
  Var output_var;
  std::vector<Var> block_vars;
  std::vector<bool> frozen;
  std::size_t dim{0};
};

namespace detail {

template <class S>
std::vector<Var> bind_blocks(Tape<S>& tape, const ParamVector& params,
                             std::span<const double> tangent) {
  std::vector<Var> vars;
  vars.reserve(params.block_count());
  std::size_t pos = 0;
  for (const auto& b : params.blocks()) {
    Tensor<S> v(b.value.shape());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if constexpr (std::is_same_v<S, Dual>) {
        v[i] = Dual(b.value[i], (b.frozen || tangent.empty()) ? 0.0 : tangent[pos + i]);
      } else {
        v[i] = b.value[i];
      }
    }
    if (b.frozen) {
      vars.push_back(tape.constant(std::move(v)));
    } else {
      vars.push_back(tape.leaf(std::move(v)));
      pos += b.value.size();
    }
  }
  return vars;
}

template <class S>
Var bind_input(Tape<S>& tape, const Matrix& input) {
  return tape.constant(input);
}

}  // namespace detail

/// Runs the program once, recording a replayable tape.
template <Program P>
ForwardResult forward(const P& program, const ParamVector& params, const Matrix& input,
                      bool consume_once = false) {
  ForwardResult r{Matrix{}, Tape<double>(TapeMode::record, consume_once), Var{}, {}, {}, params.dim()};
  r.block_vars = detail::bind_blocks(r.tape, params, {});
  for (const auto& b : params.blocks()) r.frozen.push_back(b.frozen);
  const Var in = detail::bind_input(r.tape, input);
  r.output_var = program(r.tape, std::span<const Var>(r.block_vars), in);
  r.output = r.tape.value(r.output_var);
  return r;
}

/// Evaluates the program without recording backward closures.
template <Program P>
Matrix evaluate(const P& program, const ParamVector& params, const Matrix& input) {
  Tape<double> tape(TapeMode::inference);
  const auto vars = detail::bind_blocks(tape, params, {});
  const Var in = detail::bind_input(tape, input);
  return tape.value(program(tape, std::span<const Var>(vars), in));
}

/// Gradient of the recorded output w.r.t. the trainable parameters, seeded by `seed`.
inline std::vector<double> backward(ForwardResult& fr, const Matrix& seed) {
  const auto adj = fr.tape.backward(fr.output_var, seed);
  std::vector<double> grad;
  grad.reserve(fr.dim);
  for (std::size_t b = 0; b < fr.block_vars.size(); ++b) {
    if (fr.frozen[b]) continue;
    const Var v = fr.block_vars[b];
    const std::size_t n = fr.tape.value(v).size();
    if (adj.has(v)) {
      const auto d = adj[v].data();
      grad.insert(grad.end(), d.begin(), d.end());
    } else {
      grad.insert(grad.end(), n, 0.0);
    }
  }
  return grad;
}

struct ValueAndGradient {
  double value{0.0};
  std::vector<double> gradient;
};

/// Scalar value plus gradient in one forward/backward sweep.
template <Program P>
ValueAndGradient value_and_gradient(const P& program, const ParamVector& params,
                                    const Matrix& input) {
  auto fr = forward(program, params, input);
  if (fr.output.shape() != Shape{1, 1}) throw ShapeError("value_and_gradient needs a scalar program");
  ValueAndGradient out;
  out.value = fr.output[0];
  out.gradient = backward(fr, Matrix::scalar(1.0));
  return out;
}

/// Exact Hessian-vector product by forward-over-reverse differentiation.
template <Program P>
std::vector<double> hvp(const P& program, const ParamVector& params, const Matrix& input,
                        std::span<const double> v) {
  if (v.size() != params.dim()) {
    throw ShapeError("hvp direction has dimension " + std::to_string(v.size()) + ", expected " +
                     std::to_string(params.dim()));
  }
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  if (!(norm_sq > 0.0)) throw ConfigError("hvp direction must be nonzero");

  Tape<Dual> tape;
  const auto vars = detail::bind_blocks(tape, params, v);
  const Var in = detail::bind_input(tape, input);
  const Var out = program(tape, std::span<const Var>(vars), in);
  if (auto bad = tape.non_twice_differentiable_op()) throw NotTwiceDifferentiableError(*bad);
  if (tape.shape(out) != Shape{1, 1}) throw ShapeError("hvp needs a scalar program");

  const auto adj = tape.backward(out, Tensor<Dual>::scalar(Dual(1.0, 0.0)));
  std::vector<double> hv;
  hv.reserve(params.dim());
  for (std::size_t b = 0; b < vars.size(); ++b) {
    if (params.block(b).frozen) continue;
    const std::size_t n = params.block(b).value.size();
    if (adj.has(vars[b])) {
      for (const Dual& d : adj[vars[b]].data()) hv.push_back(d.tan);
    } else {
      hv.insert(hv.end(), n, 0.0);
    }
  }
  return hv;
}

struct BlockGradCheck {
  std::string name;
  double max_abs_error{0.0};
  double max_rel_error{0.0};   // elementwise, absolute error where both sides are below the floor
  double norm_rel_error{0.0};  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  bool used_abs_fallback{false};
};

struct GradCheckReport {
  std::vector<BlockGradCheck> blocks;

  [[nodiscard]] double max_rel_error() const {
    double m = 0.0;
    for (const auto& b : blocks) m = std::max(m, b.max_rel_error);
    return m;
  }
  [[nodiscard]] double max_norm_rel_error() const {
    double m = 0.0;
    for (const auto& b : blocks) m = std::max(m, b.norm_rel_error);
    return m;
  }
};

/// Compares backward() against central differences, per trainable block.
template <Program P>
GradCheckReport grad_check(const P& program, const ParamVector& params, const Matrix& input,
                           double step, double floor = 1e-6) {
  if (!(step > 0.0 && step <= 1e-2)) throw ConfigError("grad_check step must lie in (0, 1e-2]");
  const auto analytic = value_and_gradient(program, params, input).gradient;

  ParamVector probe = params;
  auto flat = probe.flatten();
  std::vector<double> numeric(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double orig = flat[i];
    flat[i] = orig + step;
    probe.unflatten(flat);
    const double up = evaluate(program, probe, input)[0];
    flat[i] = orig - step;
    probe.unflatten(flat);
    const double down = evaluate(program, probe, input)[0];
    flat[i] = orig;
    numeric[i] = (up - down) / (2.0 * step);
  }

  GradCheckReport report;
  std::size_t pos = 0;
  for (const auto& b : params.blocks()) {
    if (b.frozen) continue;
    BlockGradCheck bc{b.name};
    double diff_sq = 0.0;
    double a_sq = 0.0;
    double n_sq = 0.0;
    for (std::size_t i = pos; i < pos + b.value.size(); ++i) {
      const double a = analytic[i];
      const double n = numeric[i];
      const double err = std::abs(a - n);
      const double scale = std::max(std::abs(a), std::abs(n));
      bc.max_abs_error = std::max(bc.max_abs_error, err);
      if (scale < floor) {
        bc.used_abs_fallback = true;
        bc.max_rel_error = std::max(bc.max_rel_error, err);
      } else {
        bc.max_rel_error = std::max(bc.max_rel_error, err / scale);
      }
      diff_sq += err * err;
      a_sq += a * a;
      n_sq += n * n;
    }
    const double denom = std::sqrt(std::max(a_sq, n_sq));
    bc.norm_rel_error = denom < floor ? std::sqrt(diff_sq) : std::sqrt(diff_sq) / denom;
    report.blocks.push_back(std::move(bc));
    pos += b.value.size();
  }
  return report;
}

}  // namespace corlab::ad
