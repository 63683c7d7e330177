// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace corlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A primitive produced NaN or Inf. Carries the offending tape node.
class NonFiniteError : public Error {
 public:
  NonFiniteError(std::size_t node, const std::string& op)
      : Error("non-finite value at node " + std::to_string(node) + " (" + op + ")"),
        node_(node),
        op_(op) {}

  [[nodiscard]] std::size_t node() const noexcept { return node_; }
  [[nodiscard]] const std::string& op() const noexcept { return op_; }

 private:
  std::size_t node_;
  std::string op_;
};

class TapeConsumedError : public Error {
 public:
  TapeConsumedError() : Error("tape already consumed by a previous backward pass") {}
};

/// Raised by hvp() when the program uses a primitive without a second derivative.
class NotTwiceDifferentiableError : public Error {
 public:
  explicit NotTwiceDifferentiableError(const std::string& op)
      : Error("primitive '" + op + "' is not twice differentiable"), op_(op) {}
  [[nodiscard]] const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace corlab
