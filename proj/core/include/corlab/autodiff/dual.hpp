// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

namespace corlab::ad {

/// First-order forward-mode number. Running the reverse pass over Dual
/// values with parameter tangents set to v yields H·v in the tangent part
/// of the gradient (forward-over-reverse).
struct Dual {
  double val{0.0};
  double tan{0.0};

  constexpr Dual() = default;
  constexpr Dual(double v) : val(v) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(double v, double t) : val(v), tan(t) {}

  constexpr Dual& operator+=(const Dual& o) {
    val += o.val;
    tan += o.tan;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    val -= o.val;
    tan -= o.tan;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    tan = tan * o.val + val * o.tan;
    val *= o.val;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.val;
    tan = (tan - val * inv * o.tan) * inv;
    val *= inv;
    return *this;
  }

  friend constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend constexpr Dual operator/(Dual a, const Dual& b) { return a /= b; }
  friend constexpr Dual operator-(const Dual& a) { return {-a.val, -a.tan}; }

  friend constexpr bool operator==(const Dual& a, const Dual& b) {
    return a.val == b.val && a.tan == b.tan;
  }
};

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.val);
  return {e, e * a.tan};
}
inline Dual log(const Dual& a) { return {std::log(a.val), a.tan / a.val}; }
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.val);
  return {s, a.tan / (2.0 * s)};
}
inline Dual tanh(const Dual& a) {
  const double t = std::tanh(a.val);
  return {t, (1.0 - t * t) * a.tan};
}
inline Dual log1p(const Dual& a) { return {std::log1p(a.val), a.tan / (1.0 + a.val)}; }

// Uniform scalar helpers so primitives can be written once for double and Dual.
inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.val; }
inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(const Dual& x) { return std::isfinite(x.val) && std::isfinite(x.tan); }

}  // namespace corlab::ad
