// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corlab/errors.hpp"

namespace corlab::ad {

/// Row-major 2-D extent. Scalars are 1x1, row vectors 1xn.
struct Shape {
  std::size_t rows{1};
  std::size_t cols{1};

  [[nodiscard]] constexpr std::size_t size() const noexcept { return rows * cols; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  [[nodiscard]] std::string str() const {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
  }
};

/// Dense real matrix over scalar type S (double, or Dual for second order).
template <class S>
class Tensor {
 public:
  using value_type = S;

  Tensor() : Tensor(Shape{1, 1}) {}

  explicit Tensor(Shape shape, S fill = S{}) : shape_(shape), data_(shape.size(), fill) {
    check_extents();
  }

  Tensor(Shape shape, std::vector<S> data) : shape_(shape), data_(std::move(data)) {
    check_extents();
    if (data_.size() != shape_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
    }
  }

  static Tensor scalar(S v) { return Tensor(Shape{1, 1}, std::vector<S>{v}); }

  static Tensor row(std::span<const S> values) {
    return Tensor(Shape{1, values.size()}, std::vector<S>(values.begin(), values.end()));
  }

  static Tensor column(std::span<const S> values) {
    return Tensor(Shape{values.size(), 1}, std::vector<S>(values.begin(), values.end()));
  }

  static Tensor from_rows(std::initializer_list<std::initializer_list<S>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<S> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged initializer for tensor");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(data));
  }

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t rows() const noexcept { return shape_.rows; }
  [[nodiscard]] std::size_t cols() const noexcept { return shape_.cols; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  [[nodiscard]] S& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
  [[nodiscard]] const S& operator()(std::size_t r, std::size_t c) const {
    return data_[r * shape_.cols + c];
  }
  [[nodiscard]] S& operator[](std::size_t i) { return data_[i]; }
  [[nodiscard]] const S& operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] std::span<S> data() noexcept { return data_; }
  [[nodiscard]] std::span<const S> data() const noexcept { return data_; }
  [[nodiscard]] std::span<const S> row_span(std::size_t r) const {
    return std::span<const S>(data_).subspan(r * shape_.cols, shape_.cols);
  }
  [[nodiscard]] std::span<S> row_span(std::size_t r) {
    return std::span<S>(data_).subspan(r * shape_.cols, shape_.cols);
  }

  [[nodiscard]] const std::vector<S>& values() const noexcept { return data_; }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_extents() const {
    if (shape_.rows == 0 || shape_.cols == 0) {
      throw ShapeError("tensor extents must be positive, got " + shape_.str());
    }
  }

  Shape shape_;
  std::vector<S> data_;
};

using Matrix = Tensor<double>;

}  // namespace corlab::ad
