// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "corlab/diagnostics/spectral.hpp"

namespace corlab::diag {

inline constexpr double kCollapseZone = 0.05;

struct CorPoint {
  std::size_t step{0};
  double grad_norm{0.0};   // ||grad L_t||
  double lambda_max{0.0};
};

struct CorReport {
  std::vector<std::size_t> steps;
  std::vector<double> bounds;     // ||grad L_t|| / lambda_max; NaN where lambda_max <= 0
  double rho_critical{0.0};
  std::size_t argmin_step{0};     // step value of the first minimising point
  std::size_t argmin_index{0};
  bool collapsed{false};          // rho_critical < kCollapseZone
  std::size_t excluded{0};        // points dropped for lambda_max <= 0
};

/// Per-step stability bounds and their minimum. Throws ConfigError when no
/// point with lambda_max > 0 is available.
CorReport cor_trajectory(std::span<const CorPoint> points);

/// f(s) = sqrt(s / (1 + s)); f(+inf) = 1.
double statistical_term(double s);

struct DecompositionReport {
  double geometric{0.0};      // kappa_s / sqrt(Tr H)
  double misspec{0.0};        // sqrt(1 + Tr Xi / Tr H)
  double statistical{0.0};    // f(GSNR)
  double rhs{0.0};
  double lhs{0.0};            // ||grad L|| / lambda_max
  double rel_gap{0.0};
};

/// Both sides of the stability decomposition from one SpectralEstimate.
/// Radicands below -tol throw WellPosednessError; within tol they clamp to 0.
DecompositionReport verify_decomposition(const SpectralEstimate& s, double floor = 1e-300, double tol = 1e-9);

struct PhaseReport {
  std::vector<double> smoothed;        // centred 5-point moving average of log GSNR
  std::vector<double> slope;           // smoothed[t] - smoothed[t-1], slope[0] = 0
  std::optional<std::size_t> rise;     // first index of phase (ii)
  std::optional<std::size_t> decay;    // first index of phase (iii)
  std::size_t t_star{0};               // index into the trace
  double gsnr_at_t_star{0.0};
  bool collapse{false};                // no rise detected
};

struct PhaseOptions {
  std::size_t window{5};
  double rise_slope{0.05};
  std::size_t rise_run{3};
  std::size_t decay_run{5};
};

/// Segments a GSNR trace into plateau / rise / decay. `cor_bounds` (same
/// length, NaN allowed) selects t* inside phase (i); when empty t* is the
/// GSNR minimum of phase (i).
PhaseReport phase_detect(std::span<const double> gsnr, std::span<const double> cor_bounds = {},
                         const PhaseOptions& opt = {});

}  // namespace corlab::diag
