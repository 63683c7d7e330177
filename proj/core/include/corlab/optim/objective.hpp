// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "corlab/autodiff/param_vector.hpp"
#include "corlab/autodiff/tape.hpp"
#include "corlab/autodiff/tensor.hpp"

namespace corlab::optim {

using ad::Matrix;

/// Finite-sum objective L(w) = mean_i l_i(w) over a fixed sample set.
/// Every method takes the flat parameter vector and a list of sample indices.
class Objective {
 public:
  virtual ~Objective() = default;

  [[nodiscard]] virtual std::size_t dim() const = 0;
  [[nodiscard]] virtual std::size_t sample_count() const = 0;

  [[nodiscard]] virtual double loss(std::span<const double> w, std::span<const std::size_t> batch) const = 0;
  [[nodiscard]] virtual std::vector<double> gradient(std::span<const double> w,
                                                     std::span<const std::size_t> batch) const = 0;
  [[nodiscard]] virtual std::vector<double> hvp(std::span<const double> w, std::span<const std::size_t> batch,
                                                std::span<const double> v) const = 0;

  /// Row j is the gradient of sample batch[j] alone.
  [[nodiscard]] virtual std::vector<std::vector<double>> per_sample_gradients(
      std::span<const double> w, std::span<const std::size_t> batch) const;

  /// True when the data cannot define a meaningful problem (e.g. one class only).
  [[nodiscard]] virtual bool degenerate() const { return false; }

  /// Indices 0..n-1.
  [[nodiscard]] std::vector<std::size_t> all_samples() const;
};

/// Logistic linear probe: z = w . x + b, mean BCE. Flat layout [w (F), b].
struct LogisticProbeLoss {
  std::vector<double> labels;

  template <class S>
  ad::Var operator()(ad::Tape<S>& t, std::span<const ad::Var> b, ad::Var x) const {
    return t.bce_with_logits(t.add_row(t.matmul(x, b[0]), b[1]), labels);
  }
};

/// Multinomial logistic regression: logits = X W + b, mean NLL. Flat layout [W (F x C), b (C)].
struct SoftmaxRegressionLoss {
  std::vector<std::size_t> labels;

  template <class S>
  ad::Var operator()(ad::Tape<S>& t, std::span<const ad::Var> b, ad::Var x) const {
    return t.softmax_nll(t.add_row(t.matmul(x, b[0]), b[1]), labels);
  }
};

/// Binary probe over fixed features, differentiated by the autodiff engine.
class ProbeObjective final : public Objective {
 public:
  ProbeObjective(Matrix features, std::vector<double> labels);

  [[nodiscard]] std::size_t dim() const override { return features_.cols() + 1; }
  [[nodiscard]] std::size_t sample_count() const override { return features_.rows(); }
  [[nodiscard]] double loss(std::span<const double> w, std::span<const std::size_t> batch) const override;
  [[nodiscard]] std::vector<double> gradient(std::span<const double> w,
                                             std::span<const std::size_t> batch) const override;
  [[nodiscard]] std::vector<double> hvp(std::span<const double> w, std::span<const std::size_t> batch,
                                        std::span<const double> v) const override;
  /// Closed form (sigmoid(z_i) - y_i) [x_i; 1].
  [[nodiscard]] std::vector<std::vector<double>> per_sample_gradients(
      std::span<const double> w, std::span<const std::size_t> batch) const override;
  [[nodiscard]] bool degenerate() const override;

  /// Logits for every sample.
  [[nodiscard]] std::vector<double> scores(std::span<const double> w) const;
  [[nodiscard]] const Matrix& features() const noexcept { return features_; }
  [[nodiscard]] const std::vector<double>& labels() const noexcept { return labels_; }

 private:
  [[nodiscard]] ad::ParamVector params(std::span<const double> w) const;
  [[nodiscard]] Matrix rows(std::span<const std::size_t> batch) const;
  [[nodiscard]] std::vector<double> labels_of(std::span<const std::size_t> batch) const;

  Matrix features_;
  std::vector<double> labels_;
};

/// Softmax regression over fixed features, differentiated by the autodiff engine.
class SoftmaxObjective final : public Objective {
 public:
  SoftmaxObjective(Matrix features, std::vector<std::size_t> labels, std::size_t classes);

  [[nodiscard]] std::size_t dim() const override { return (features_.cols() + 1) * classes_; }
  [[nodiscard]] std::size_t sample_count() const override { return features_.rows(); }
  [[nodiscard]] std::size_t classes() const noexcept { return classes_; }
  [[nodiscard]] double loss(std::span<const double> w, std::span<const std::size_t> batch) const override;
  [[nodiscard]] std::vector<double> gradient(std::span<const double> w,
                                             std::span<const std::size_t> batch) const override;
  [[nodiscard]] std::vector<double> hvp(std::span<const double> w, std::span<const std::size_t> batch,
                                        std::span<const double> v) const override;

  /// Class probabilities of every sample (n x C).
  [[nodiscard]] Matrix probabilities(std::span<const double> w) const;
  [[nodiscard]] const Matrix& features() const noexcept { return features_; }
  [[nodiscard]] const std::vector<std::size_t>& labels() const noexcept { return labels_; }

 private:
  [[nodiscard]] ad::ParamVector params(std::span<const double> w) const;
  [[nodiscard]] Matrix rows(std::span<const std::size_t> batch) const;

  Matrix features_;
  std::vector<std::size_t> labels_;
  std::size_t classes_;
};

/// l_i(w) = 0.5 (w - a_i)^T A (w - a_i) with symmetric A; Hessian A everywhere.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Matrix A, Matrix anchors);

  [[nodiscard]] std::size_t dim() const override { return A_.rows(); }
  [[nodiscard]] std::size_t sample_count() const override { return anchors_.rows(); }
  [[nodiscard]] double loss(std::span<const double> w, std::span<const std::size_t> batch) const override;
  [[nodiscard]] std::vector<double> gradient(std::span<const double> w,
                                             std::span<const std::size_t> batch) const override;
  [[nodiscard]] std::vector<double> hvp(std::span<const double> w, std::span<const std::size_t> batch,
                                        std::span<const double> v) const override;
  [[nodiscard]] const Matrix& hessian() const noexcept { return A_; }
  [[nodiscard]] const Matrix& anchors() const noexcept { return anchors_; }

 private:
  Matrix A_;
  Matrix anchors_;
};

// Small vector helpers shared by the optimizer and diagnostics.
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

}  // namespace corlab::optim
