// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "corlab/autodiff/dual.hpp"
#include "corlab/autodiff/tensor.hpp"
#include "corlab/errors.hpp"

namespace corlab::ad {

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id{0};
};

enum class TapeMode {
  record,     // keep backward closures
  inference,  // values only, backward() unavailable
};

/// Per-node adjoints produced by Tape::backward().
template <class S>
class Adjoints {
 public:
  explicit Adjoints(std::size_t n) : grads_(n) {}

  [[nodiscard]] bool has(Var v) const { return grads_[v.id].has_value(); }
  [[nodiscard]] const Tensor<S>& operator[](Var v) const { return *grads_[v.id]; }

  void accumulate(std::size_t id, Tensor<S> g) {
    auto& slot = grads_[id];
    if (!slot) {
      slot = std::move(g);
      return;
    }
    auto dst = slot->data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  std::optional<Tensor<S>>& slot(std::size_t id) { return grads_[id]; }

 private:
  std::vector<std::optional<Tensor<S>>> grads_;
};

/// Single-writer record of primitive applications in topological order.
/// Values are computed eagerly; every primitive output is checked for
/// finiteness and the reverse pass visits nodes in reverse tape order.
template <class S>
class Tape {
 public:
  using T = Tensor<S>;
  using BackwardFn = std::function<void(const Tape&, const T& gout, Adjoints<S>&)>;

  explicit Tape(TapeMode mode = TapeMode::record, bool consume_once = false)
      : mode_(mode), consume_once_(consume_once) {}

  Var constant(T value) { return push(std::move(value), "constant", true, {}); }

  Var constant(const Matrix& value)
    requires(!std::is_same_v<S, double>)
  {
    T lifted(value.shape());
    for (std::size_t i = 0; i < value.size(); ++i) lifted[i] = S(value[i]);
    return constant(std::move(lifted));
  }

  /// Leaf whose adjoint is read back after backward().
  Var leaf(T value) { return push(std::move(value), "leaf", true, {}); }

  [[nodiscard]] const T& value(Var v) const { return nodes_[v.id].value; }
  [[nodiscard]] const Shape& shape(Var v) const { return nodes_[v.id].value.shape(); }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] std::string_view op_name(Var v) const { return nodes_[v.id].op; }
  [[nodiscard]] bool consumed() const noexcept { return consumed_; }

  /// Name of the first recorded primitive without a second derivative.
  [[nodiscard]] std::optional<std::string> non_twice_differentiable_op() const {
    for (const auto& n : nodes_) {
      if (!n.twice_differentiable) return std::string(n.op);
    }
    return std::nullopt;
  }

  // ---------------------------------------------------------------- primitives

  Var matmul(Var a, Var b) {
    const T& A = value(a);
    const T& B = value(b);
    if (A.cols() != B.rows()) {
      throw ShapeError("matmul " + A.shape().str() + " x " + B.shape().str());
    }
    return push(mul_mat(A, B), "matmul", true, [a, b](const Tape& t, const T& g, Adjoints<S>& adj) {
      adj.accumulate(a.id, mul_mat_bt(g, t.value(b)));
      adj.accumulate(b.id, mul_mat_at(t.value(a), g));
    });
  }

  Var add(Var a, Var b) {
    require_same(a, b, "add");
    T out = value(a);
    const T& B = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
    return push(std::move(out), "add", true, [a, b](const Tape&, const T& g, Adjoints<S>& adj) {
      adj.accumulate(a.id, g);
      adj.accumulate(b.id, g);
    });
  }

  Var sub(Var a, Var b) {
    require_same(a, b, "sub");
    T out = value(a);
    const T& B = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
    return push(std::move(out), "sub", true, [a, b](const Tape&, const T& g, Adjoints<S>& adj) {
      adj.accumulate(a.id, g);
      T neg = g;
      for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
      adj.accumulate(b.id, std::move(neg));
    });
  }

  /// Elementwise product.
  Var mul(Var a, Var b) {
    require_same(a, b, "mul");
    T out = value(a);
    const T& B = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
    return push(std::move(out), "mul", true, [a, b](const Tape& t, const T& g, Adjoints<S>& adj) {
      T ga = g;
      T gb = g;
      const T& A = t.value(a);
      const T& B = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] *= B[i];
        gb[i] *= A[i];
      }
      adj.accumulate(a.id, std::move(ga));
      adj.accumulate(b.id, std::move(gb));
    });
  }

  Var scale(Var a, double s) {
    T out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= S(s);
    return push(std::move(out), "scale", true, [a, s](const Tape&, const T& g, Adjoints<S>& adj) {
      T ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= S(s);
      adj.accumulate(a.id, std::move(ga));
    });
  }

  /// a (r x c) + row (1 x c) broadcast over rows.
  Var add_row(Var a, Var row) {
    const T& A = value(a);
    const T& R = value(row);
    if (R.rows() != 1 || R.cols() != A.cols()) {
      throw ShapeError("add_row " + A.shape().str() + " + " + R.shape().str());
    }
    T out = A;
    for (std::size_t r = 0; r < A.rows(); ++r) {
      for (std::size_t c = 0; c < A.cols(); ++c) out(r, c) += R(0, c);
    }
    return push(std::move(out), "add_row", true,
                [a, row](const Tape&, const T& g, Adjoints<S>& adj) {
                  T gr(Shape{1, g.cols()});
                  for (std::size_t r = 0; r < g.rows(); ++r) {
                    for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
                  }
                  adj.accumulate(a.id, g);
                  adj.accumulate(row.id, std::move(gr));
                });
  }

  Var softmax_rows(Var a) {
    const T& A = value(a);
    T out(A.shape());
    for (std::size_t r = 0; r < A.rows(); ++r) {
      double mx = value_of(A(r, 0));
      for (std::size_t c = 1; c < A.cols(); ++c) mx = std::max(mx, value_of(A(r, c)));
      S total{};
      for (std::size_t c = 0; c < A.cols(); ++c) {
        using std::exp;
        out(r, c) = exp(A(r, c) - S(mx));
        total += out(r, c);
      }
      for (std::size_t c = 0; c < A.cols(); ++c) out(r, c) /= total;
    }
    const std::size_t self = nodes_.size();
    return push(std::move(out), "softmax", true,
                [a, self](const Tape& t, const T& g, Adjoints<S>& adj) {
                  const T& Y = t.nodes_[self].value;
                  T ga(g.shape());
                  for (std::size_t r = 0; r < g.rows(); ++r) {
                    S dot{};
                    for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * Y(r, c);
                    for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) = Y(r, c) * (g(r, c) - dot);
                  }
                  adj.accumulate(a.id, std::move(ga));
                });
  }

  /// Row-wise layer normalisation with affine gamma/beta (both 1 x cols).
  Var layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
    const T& X = value(x);
    const T& G = value(gamma);
    const T& B = value(beta);
    if (G.shape() != Shape{1, X.cols()} || B.shape() != Shape{1, X.cols()}) {
      throw ShapeError("layer_norm affine shape mismatch for input " + X.shape().str());
    }
    const std::size_t n = X.cols();
    T xhat(X.shape());
    T inv(Shape{X.rows(), 1});
    T out(X.shape());
    for (std::size_t r = 0; r < X.rows(); ++r) {
      S mean{};
      for (std::size_t c = 0; c < n; ++c) mean += X(r, c);
      mean /= S(static_cast<double>(n));
      S var{};
      for (std::size_t c = 0; c < n; ++c) {
        const S d = X(r, c) - mean;
        var += d * d;
      }
      var /= S(static_cast<double>(n));
      using std::sqrt;
      inv(r, 0) = S(1.0) / sqrt(var + S(eps));
      for (std::size_t c = 0; c < n; ++c) {
        xhat(r, c) = (X(r, c) - mean) * inv(r, 0);
        out(r, c) = xhat(r, c) * G(0, c) + B(0, c);
      }
    }
    return push(std::move(out), "layer_norm", true,
                [x, gamma, beta, xhat = std::move(xhat), inv = std::move(inv)](
                    const Tape& t, const T& g, Adjoints<S>& adj) {
                  const T& Gm = t.value(gamma);
                  const std::size_t cols = g.cols();
                  const S ncols(static_cast<double>(cols));
                  T gx(g.shape());
                  T gg(Shape{1, cols});
                  T gb(Shape{1, cols});
                  for (std::size_t r = 0; r < g.rows(); ++r) {
                    S mean_d{};
                    S mean_dx{};
                    for (std::size_t c = 0; c < cols; ++c) {
                      const S d = g(r, c) * Gm(0, c);
                      mean_d += d;
                      mean_dx += d * xhat(r, c);
                      gg(0, c) += g(r, c) * xhat(r, c);
                      gb(0, c) += g(r, c);
                    }
                    mean_d /= ncols;
                    mean_dx /= ncols;
                    for (std::size_t c = 0; c < cols; ++c) {
                      const S d = g(r, c) * Gm(0, c);
                      gx(r, c) = inv(r, 0) * (d - mean_d - xhat(r, c) * mean_dx);
                    }
                  }
                  adj.accumulate(x.id, std::move(gx));
                  adj.accumulate(gamma.id, std::move(gg));
                  adj.accumulate(beta.id, std::move(gb));
                });
  }

  /// GELU, tanh approximation.
  Var gelu(Var a) {
    const T& A = value(a);
    T out(A.shape());
    for (std::size_t i = 0; i < A.size(); ++i) {
      const S x = A[i];
      using std::tanh;
      const S th = tanh(S(kGeluC) * (x + S(kGeluA) * x * x * x));
      out[i] = S(0.5) * x * (S(1.0) + th);
    }
    return push(std::move(out), "gelu", true, [a](const Tape& t, const T& g, Adjoints<S>& adj) {
      const T& A = t.value(a);
      T ga(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) {
        const S x = A[i];
        using std::tanh;
        const S th = tanh(S(kGeluC) * (x + S(kGeluA) * x * x * x));
        const S dth = (S(1.0) - th * th) * S(kGeluC) * (S(1.0) + S(3.0 * kGeluA) * x * x);
        ga[i] = g[i] * (S(0.5) * (S(1.0) + th) + S(0.5) * x * dth);
      }
      adj.accumulate(a.id, std::move(ga));
    });
  }

  /// Rectifier. Kink at 0, so no exact second derivative.
  Var relu(Var a) {
    const T& A = value(a);
    T out(A.shape());
    for (std::size_t i = 0; i < A.size(); ++i) out[i] = value_of(A[i]) > 0.0 ? A[i] : S(0.0);
    return push(std::move(out), "relu", false, [a](const Tape& t, const T& g, Adjoints<S>& adj) {
      const T& A = t.value(a);
      T ga(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = value_of(A[i]) > 0.0 ? g[i] : S(0.0);
      adj.accumulate(a.id, std::move(ga));
    });
  }

  Var sum(Var a) {
    const T& A = value(a);
    S total{};
    for (std::size_t i = 0; i < A.size(); ++i) total += A[i];
    return push(T::scalar(total), "sum", true, [a](const Tape& t, const T& g, Adjoints<S>& adj) {
      adj.accumulate(a.id, T(t.shape(a), g[0]));
    });
  }

  Var mean(Var a) {
    const T& A = value(a);
    const double n = static_cast<double>(A.size());
    S total{};
    for (std::size_t i = 0; i < A.size(); ++i) total += A[i];
    return push(T::scalar(total / S(n)), "mean", true,
                [a, n](const Tape& t, const T& g, Adjoints<S>& adj) {
                  adj.accumulate(a.id, T(t.shape(a), g[0] / S(n)));
                });
  }

  Var gather_rows(Var a, std::vector<std::size_t> idx) {
    const T& A = value(a);
    if (idx.empty()) throw ShapeError("gather_rows with empty index list");
    T out(Shape{idx.size(), A.cols()});
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] >= A.rows()) throw ShapeError("gather_rows index out of range");
      for (std::size_t c = 0; c < A.cols(); ++c) out(r, c) = A(idx[r], c);
    }
    return push(std::move(out), "gather_rows", true,
                [a, idx = std::move(idx)](const Tape& t, const T& g, Adjoints<S>& adj) {
                  T ga(t.shape(a));
                  for (std::size_t r = 0; r < idx.size(); ++r) {
                    for (std::size_t c = 0; c < g.cols(); ++c) ga(idx[r], c) += g(r, c);
                  }
                  adj.accumulate(a.id, std::move(ga));
                });
  }

  Var gather_cols(Var a, std::vector<std::size_t> idx) {
    const T& A = value(a);
    if (idx.empty()) throw ShapeError("gather_cols with empty index list");
    T out(Shape{A.rows(), idx.size()});
    for (std::size_t c = 0; c < idx.size(); ++c) {
      if (idx[c] >= A.cols()) throw ShapeError("gather_cols index out of range");
    }
    for (std::size_t r = 0; r < A.rows(); ++r) {
      for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = A(r, idx[c]);
    }
    return push(std::move(out), "gather_cols", true,
                [a, idx = std::move(idx)](const Tape& t, const T& g, Adjoints<S>& adj) {
                  T ga(t.shape(a));
                  for (std::size_t r = 0; r < g.rows(); ++r) {
                    for (std::size_t c = 0; c < idx.size(); ++c) ga(r, idx[c]) += g(r, c);
                  }
                  adj.accumulate(a.id, std::move(ga));
                });
  }

  Var transpose(Var a) {
    return push(transposed(value(a)), "transpose", true,
                [a](const Tape&, const T& g, Adjoints<S>& adj) { adj.accumulate(a.id, transposed(g)); });
  }

  Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows of nothing");
    const std::size_t cols = shape(parts.front()).cols;
    std::size_t rows = 0;
    for (Var p : parts) {
      if (shape(p).cols != cols) throw ShapeError("concat_rows column mismatch");
      rows += shape(p).rows;
    }
    std::vector<S> data;
    data.reserve(rows * cols);
    for (Var p : parts) {
      const auto src = value(p).data();
      data.insert(data.end(), src.begin(), src.end());
    }
    return push(T(Shape{rows, cols}, std::move(data)), "concat_rows", true,
                [parts](const Tape& t, const T& g, Adjoints<S>& adj) {
                  std::size_t offset = 0;
                  for (Var p : parts) {
                    const Shape s = t.shape(p);
                    auto src = g.data().subspan(offset, s.size());
                    adj.accumulate(p.id, T(s, std::vector<S>(src.begin(), src.end())));
                    offset += s.size();
                  }
                });
  }

  Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols of nothing");
    const std::size_t rows = shape(parts.front()).rows;
    std::size_t cols = 0;
    for (Var p : parts) {
      if (shape(p).rows != rows) throw ShapeError("concat_cols row mismatch");
      cols += shape(p).cols;
    }
    T out(Shape{rows, cols});
    std::size_t offset = 0;
    for (Var p : parts) {
      const T& P = value(p);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < P.cols(); ++c) out(r, offset + c) = P(r, c);
      }
      offset += P.cols();
    }
    return push(std::move(out), "concat_cols", true,
                [parts](const Tape& t, const T& g, Adjoints<S>& adj) {
                  std::size_t off = 0;
                  for (Var p : parts) {
                    const Shape s = t.shape(p);
                    T gp(s);
                    for (std::size_t r = 0; r < s.rows; ++r) {
                      for (std::size_t c = 0; c < s.cols; ++c) gp(r, c) = g(r, off + c);
                    }
                    adj.accumulate(p.id, std::move(gp));
                    off += s.cols;
                  }
                });
  }

  /// Mean binary cross-entropy of logits (n x 1) against 0/1 labels.
  Var bce_with_logits(Var logits, std::vector<double> labels) {
    const T& Z = value(logits);
    if (Z.cols() != 1 || Z.rows() != labels.size()) {
      throw ShapeError("bce_with_logits expects (n x 1) logits matching label count");
    }
    const double n = static_cast<double>(labels.size());
    S total{};
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const S z = Z[i];
      // softplus(z) - y z, with the overflow-free softplus split
      using std::exp;
      using std::log1p;
      const bool pos = value_of(z) > 0.0;
      const S softplus = pos ? z + log1p(exp(-z)) : log1p(exp(z));
      total += softplus - S(labels[i]) * z;
    }
    return push(T::scalar(total / S(n)), "bce_with_logits", true,
                [logits, labels = std::move(labels), n](const Tape& t, const T& g, Adjoints<S>& adj) {
                  const T& Zv = t.value(logits);
                  T gz(Zv.shape());
                  for (std::size_t i = 0; i < labels.size(); ++i) {
                    gz[i] = g[0] * (sigmoid(Zv[i]) - S(labels[i])) / S(n);
                  }
                  adj.accumulate(logits.id, std::move(gz));
                });
  }

  /// Mean negative log-likelihood of a row-wise softmax over class logits.
  Var softmax_nll(Var logits, std::vector<std::size_t> labels) {
    const T& Z = value(logits);
    if (Z.rows() != labels.size()) throw ShapeError("softmax_nll label count mismatch");
    const double n = static_cast<double>(labels.size());
    T probs(Z.shape());
    S total{};
    for (std::size_t r = 0; r < Z.rows(); ++r) {
      if (labels[r] >= Z.cols()) throw ShapeError("softmax_nll label out of range");
      double mx = value_of(Z(r, 0));
      for (std::size_t c = 1; c < Z.cols(); ++c) mx = std::max(mx, value_of(Z(r, c)));
      S denom{};
      for (std::size_t c = 0; c < Z.cols(); ++c) {
        using std::exp;
        probs(r, c) = exp(Z(r, c) - S(mx));
        denom += probs(r, c);
      }
      for (std::size_t c = 0; c < Z.cols(); ++c) probs(r, c) /= denom;
      using std::log;
      total += log(denom) + S(mx) - Z(r, labels[r]);
    }
    return push(T::scalar(total / S(n)), "softmax_nll", true,
                [logits, labels = std::move(labels), probs = std::move(probs), n](
                    const Tape&, const T& g, Adjoints<S>& adj) {
                  T gz = probs;
                  for (std::size_t r = 0; r < gz.rows(); ++r) {
                    gz(r, labels[r]) -= S(1.0);
                    for (std::size_t c = 0; c < gz.cols(); ++c) gz(r, c) *= g[0] / S(n);
                  }
                  adj.accumulate(logits.id, std::move(gz));
                });
  }

  // ------------------------------------------------------------ reverse pass

  /// Propagates `seed` (shape of `output`) back through the tape.
  Adjoints<S> backward(Var output, const T& seed) {
    if (mode_ == TapeMode::inference) throw Error("backward() on an inference-mode tape");
    if (consume_once_ && consumed_) throw TapeConsumedError();
    if (seed.shape() != shape(output)) {
      throw ShapeError("backward seed " + seed.shape().str() + " vs output " +
                       shape(output).str());
    }
    consumed_ = true;
    Adjoints<S> adj(nodes_.size());
    adj.accumulate(output.id, seed);
    for (std::size_t i = output.id + 1; i-- > 0;) {
      auto& g = adj.slot(i);
      if (!g || !nodes_[i].backward) continue;
      for (std::size_t k = 0; k < g->size(); ++k) {
        if (!is_finite((*g)[k])) throw NonFiniteError(i, std::string(nodes_[i].op) + " (backward)");
      }
      nodes_[i].backward(*this, *g, adj);
    }
    return adj;
  }

 private:
  static constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
  static constexpr double kGeluA = 0.044715;

  struct Node {
    T value;
    std::string_view op;
    bool twice_differentiable;
    BackwardFn backward;
  };

  Var push(T value, std::string_view op, bool twice, BackwardFn fn) {
    const std::size_t id = nodes_.size();
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (!is_finite(value[i])) throw NonFiniteError(id, std::string(op));
    }
    if (mode_ == TapeMode::inference) fn = nullptr;
    nodes_.push_back(Node{std::move(value), op, twice, std::move(fn)});
    return Var{id};
  }

  void require_same(Var a, Var b, const char* op) const {
    if (shape(a) != shape(b)) {
      throw ShapeError(std::string(op) + " " + shape(a).str() + " vs " + shape(b).str());
    }
  }

  static S sigmoid(const S& z) {
    using std::exp;
    if (value_of(z) >= 0.0) return S(1.0) / (S(1.0) + exp(-z));
    const S e = exp(z);
    return e / (S(1.0) + e);
  }

  static T mul_mat(const T& A, const T& B) {
    T C(Shape{A.rows(), B.cols()});
    for (std::size_t i = 0; i < A.rows(); ++i) {
      for (std::size_t k = 0; k < A.cols(); ++k) {
        const S a = A(i, k);
        for (std::size_t j = 0; j < B.cols(); ++j) C(i, j) += a * B(k, j);
      }
    }
    return C;
  }

  // G (m x n) * B^T where B is (k x n)
  static T mul_mat_bt(const T& G, const T& B) {
    T C(Shape{G.rows(), B.rows()});
    for (std::size_t i = 0; i < G.rows(); ++i) {
      for (std::size_t k = 0; k < B.rows(); ++k) {
        S acc{};
        for (std::size_t j = 0; j < G.cols(); ++j) acc += G(i, j) * B(k, j);
        C(i, k) = acc;
      }
    }
    return C;
  }

  // A^T * G where A is (m x k), G is (m x n)
  static T mul_mat_at(const T& A, const T& G) {
    T C(Shape{A.cols(), G.cols()});
    for (std::size_t i = 0; i < A.rows(); ++i) {
      for (std::size_t k = 0; k < A.cols(); ++k) {
        const S a = A(i, k);
        for (std::size_t j = 0; j < G.cols(); ++j) C(k, j) += a * G(i, j);
      }
    }
    return C;
  }

  static T transposed(const T& A) {
    T out(Shape{A.cols(), A.rows()});
    for (std::size_t r = 0; r < A.rows(); ++r) {
      for (std::size_t c = 0; c < A.cols(); ++c) out(c, r) = A(r, c);
    }
    return out;
  }

  TapeMode mode_;
  bool consume_once_;
  bool consumed_{false};
  std::vector<Node> nodes_;
};

}  // namespace corlab::ad
