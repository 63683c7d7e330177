// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "corlab/autodiff/tensor.hpp"

namespace corlab::ad {

/// Named parameter blocks with a flat view over the trainable ones.
///
/// The flat vector has dimension P = total size of non-frozen blocks, in
/// insertion order. Frozen blocks are carried along for the program but
/// never appear in P or in the gradient storage.
class ParamVector {
 public:
  struct Block {
    std::string name;
    Matrix value;
    bool frozen{false};
  };

  ParamVector() = default;

  /// Appends a block and returns its index.
  std::size_t add(std::string name, Matrix value, bool frozen = false);

  [[nodiscard]] std::size_t block_count() const noexcept { return blocks_.size(); }
  [[nodiscard]] const Block& block(std::size_t i) const { return blocks_.at(i); }
  [[nodiscard]] const Block& block(const std::string& name) const;
  [[nodiscard]] std::size_t index_of(const std::string& name) const;
  [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }

  /// Trainable dimension P.
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

  /// Offset of a trainable block inside the flat vector.
  [[nodiscard]] std::size_t offset(std::size_t block) const;

  [[nodiscard]] std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);

  /// Gradient storage paired with the flat vector (dimension P).
  [[nodiscard]] std::span<double> gradient() noexcept { return grad_; }
  [[nodiscard]] std::span<const double> gradient() const noexcept { return grad_; }
  void zero_gradient();

 private:
  std::vector<Block> blocks_;
  std::vector<std::size_t> offsets_;
  std::vector<double> grad_;
  std::size_t dim_{0};
};

}  // namespace corlab::ad
