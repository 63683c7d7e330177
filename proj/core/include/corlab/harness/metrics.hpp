// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

namespace corlab::harness {

/// Mann-Whitney AUC with average ranks for ties. Labels are 0/1; throws
/// ConfigError when a class is missing.
double compute_auc(std::span<const double> scores, std::span<const double> labels);

/// (perturbed - raw) / raw; raw must be nonzero.
double relative_auc(double raw, double perturbed);

/// Spearman rank correlation with average ranks.
double spearman(std::span<const double> a, std::span<const double> b);

struct LinearFit {
  double slope{0.0};
  double intercept{0.0};
  double r_squared{0.0};
};

/// Ordinary least squares y = slope x + intercept.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace corlab::harness
