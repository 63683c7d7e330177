// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/optim/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "corlab/autodiff/engine.hpp"
#include "corlab/errors.hpp"

namespace corlab::optim {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot of mismatched vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<std::vector<double>> Objective::per_sample_gradients(std::span<const double> w,
                                                                 std::span<const std::size_t> batch) const {
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (std::size_t i : batch) out.push_back(gradient(w, std::span<const std::size_t>(&i, 1)));
  return out;
}

std::vector<std::size_t> Objective::all_samples() const {
  std::vector<std::size_t> idx(sample_count());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

namespace {

void require_batch(std::span<const std::size_t> batch, std::size_t n) {
  if (batch.empty()) throw ConfigError("empty batch");
  for (auto i : batch) {
    if (i >= n) throw ConfigError("batch index " + std::to_string(i) + " out of range");
  }
}

void require_dim(std::span<const double> w, std::size_t p) {
  if (w.size() != p) {
    throw ShapeError("parameter vector has " + std::to_string(w.size()) + " entries, expected " +
                     std::to_string(p));
  }
}

Matrix gather(const Matrix& m, std::span<const std::size_t> batch) {
  std::vector<double> data;
  data.reserve(batch.size() * m.cols());
  for (auto i : batch) {
    auto r = m.row_span(i);
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(ad::Shape{batch.size(), m.cols()}, std::move(data));
}

}  // namespace

// ------------------------------------------------------------------ probe

ProbeObjective::ProbeObjective(Matrix features, std::vector<double> labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (labels_.size() != features_.rows()) throw ShapeError("probe label count mismatch");
  for (double y : labels_) {
    if (y != 0.0 && y != 1.0) throw ConfigError("probe labels must be 0 or 1");
  }
}

bool ProbeObjective::degenerate() const {
  bool pos = false;
  bool neg = false;
  for (double y : labels_) (y > 0.5 ? pos : neg) = true;
  return !(pos && neg);
}

ad::ParamVector ProbeObjective::params(std::span<const double> w) const {
  require_dim(w, dim());
  ad::ParamVector p;
  p.add("weight", Matrix(ad::Shape{features_.cols(), 1}, std::vector<double>(w.begin(), w.end() - 1)));
  p.add("bias", Matrix::scalar(w.back()));
  return p;
}

Matrix ProbeObjective::rows(std::span<const std::size_t> batch) const {
  require_batch(batch, sample_count());
  return gather(features_, batch);
}

std::vector<double> ProbeObjective::labels_of(std::span<const std::size_t> batch) const {
  std::vector<double> y;
  y.reserve(batch.size());
  for (auto i : batch) y.push_back(labels_[i]);
  return y;
}

double ProbeObjective::loss(std::span<const double> w, std::span<const std::size_t> batch) const {
  return ad::evaluate(LogisticProbeLoss{labels_of(batch)}, params(w), rows(batch))[0];
}

std::vector<double> ProbeObjective::gradient(std::span<const double> w,
                                             std::span<const std::size_t> batch) const {
  return ad::value_and_gradient(LogisticProbeLoss{labels_of(batch)}, params(w), rows(batch)).gradient;
}

std::vector<double> ProbeObjective::hvp(std::span<const double> w, std::span<const std::size_t> batch,
                                        std::span<const double> v) const {
  return ad::hvp(LogisticProbeLoss{labels_of(batch)}, params(w), rows(batch), v);
}

std::vector<std::vector<double>> ProbeObjective::per_sample_gradients(
    std::span<const double> w, std::span<const std::size_t> batch) const {
  require_dim(w, dim());
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (auto i : batch) {
    auto x = features_.row_span(i);
    double z = w.back();
    for (std::size_t c = 0; c < x.size(); ++c) z += w[c] * x[c];
    const double r = 1.0 / (1.0 + std::exp(-z)) - labels_.at(i);
    std::vector<double> g(dim());
    for (std::size_t c = 0; c < x.size(); ++c) g[c] = r * x[c];
    g.back() = r;
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<double> ProbeObjective::scores(std::span<const double> w) const {
  require_dim(w, dim());
  std::vector<double> s(sample_count());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double z = w.back();
    auto x = features_.row_span(i);
    for (std::size_t c = 0; c < x.size(); ++c) z += w[c] * x[c];
    s[i] = z;
  }
  return s;
}

// ---------------------------------------------------------------- softmax

SoftmaxObjective::SoftmaxObjective(Matrix features, std::vector<std::size_t> labels, std::size_t classes)
    : features_(std::move(features)), labels_(std::move(labels)), classes_(classes) {
  if (labels_.size() != features_.rows()) throw ShapeError("softmax label count mismatch");
  if (classes_ < 2) throw ConfigError("softmax regression needs at least two classes");
  for (auto y : labels_) {
    if (y >= classes_) throw ConfigError("softmax label out of range");
  }
}

ad::ParamVector SoftmaxObjective::params(std::span<const double> w) const {
  require_dim(w, dim());
  const std::size_t f = features_.cols();
  ad::ParamVector p;
  p.add("W", Matrix(ad::Shape{f, classes_}, std::vector<double>(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(f * classes_))));
  p.add("b", Matrix(ad::Shape{1, classes_}, std::vector<double>(w.end() - static_cast<std::ptrdiff_t>(classes_), w.end())));
  return p;
}

Matrix SoftmaxObjective::rows(std::span<const std::size_t> batch) const {
  require_batch(batch, sample_count());
  return gather(features_, batch);
}

double SoftmaxObjective::loss(std::span<const double> w, std::span<const std::size_t> batch) const {
  std::vector<std::size_t> y;
  for (auto i : batch) y.push_back(labels_.at(i));
  return ad::evaluate(SoftmaxRegressionLoss{y}, params(w), rows(batch))[0];
}

std::vector<double> SoftmaxObjective::gradient(std::span<const double> w,
                                               std::span<const std::size_t> batch) const {
  std::vector<std::size_t> y;
  for (auto i : batch) y.push_back(labels_.at(i));
  return ad::value_and_gradient(SoftmaxRegressionLoss{y}, params(w), rows(batch)).gradient;
}

std::vector<double> SoftmaxObjective::hvp(std::span<const double> w, std::span<const std::size_t> batch,
                                          std::span<const double> v) const {
  std::vector<std::size_t> y;
  for (auto i : batch) y.push_back(labels_.at(i));
  return ad::hvp(SoftmaxRegressionLoss{y}, params(w), rows(batch), v);
}

Matrix SoftmaxObjective::probabilities(std::span<const double> w) const {
  require_dim(w, dim());
  const std::size_t f = features_.cols();
  Matrix p(ad::Shape{sample_count(), classes_});
  for (std::size_t i = 0; i < sample_count(); ++i) {
    std::vector<double> z(classes_);
    for (std::size_t k = 0; k < classes_; ++k) {
      double s = w[f * classes_ + k];
      for (std::size_t c = 0; c < f; ++c) s += features_(i, c) * w[c * classes_ + k];
      z[k] = s;
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double tot = 0.0;
    for (auto& e : z) {
      e = std::exp(e - mx);
      tot += e;
    }
    for (std::size_t k = 0; k < classes_; ++k) p(i, k) = z[k] / tot;
  }
  return p;
}

// -------------------------------------------------------------- quadratic

QuadraticObjective::QuadraticObjective(Matrix A, Matrix anchors) : A_(std::move(A)), anchors_(std::move(anchors)) {
  if (A_.rows() != A_.cols()) throw ShapeError("quadratic matrix must be square");
  if (anchors_.cols() != A_.rows()) throw ShapeError("anchor width must match the quadratic");
  for (std::size_t i = 0; i < A_.rows(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (A_(i, j) != A_(j, i)) throw ConfigError("quadratic matrix must be symmetric");
    }
  }
}

double QuadraticObjective::loss(std::span<const double> w, std::span<const std::size_t> batch) const {
  require_dim(w, dim());
  require_batch(batch, sample_count());
  const std::size_t p = dim();
  double total = 0.0;
  std::vector<double> d(p);
  for (auto i : batch) {
    for (std::size_t c = 0; c < p; ++c) d[c] = w[c] - anchors_(i, c);
    double q = 0.0;
    for (std::size_t r = 0; r < p; ++r) {
      double ar = 0.0;
      for (std::size_t c = 0; c < p; ++c) ar += A_(r, c) * d[c];
      q += d[r] * ar;
    }
    total += 0.5 * q;
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> QuadraticObjective::gradient(std::span<const double> w,
                                                 std::span<const std::size_t> batch) const {
  require_dim(w, dim());
  require_batch(batch, sample_count());
  const std::size_t p = dim();
  // mean_i A (w - a_i) = A (w - mean a)
  std::vector<double> d(w.begin(), w.end());
  std::vector<double> mean_a(p, 0.0);
  for (auto i : batch) {
    for (std::size_t c = 0; c < p; ++c) mean_a[c] += anchors_(i, c);
  }
  for (std::size_t c = 0; c < p; ++c) d[c] -= mean_a[c] / static_cast<double>(batch.size());
  std::vector<double> g(p, 0.0);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = 0; c < p; ++c) g[r] += A_(r, c) * d[c];
  }
  return g;
}

std::vector<double> QuadraticObjective::hvp(std::span<const double> w, std::span<const std::size_t> batch,
                                            std::span<const double> v) const {
  require_dim(w, dim());
  require_dim(v, dim());
  require_batch(batch, sample_count());
  std::vector<double> out(dim(), 0.0);
  for (std::size_t r = 0; r < dim(); ++r) {
    for (std::size_t c = 0; c < dim(); ++c) out[r] += A_(r, c) * v[c];
  }
  return out;
}

}  // namespace corlab::optim
