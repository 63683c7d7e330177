// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/diagnostics/cor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace corlab::diag {

CorReport cor_trajectory(std::span<const CorPoint> points) {
  if (points.empty()) throw ConfigError("cor_trajectory needs at least one instrumented step");
  CorReport r;
  r.rho_critical = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    r.steps.push_back(p.step);
    if (!(p.lambda_max > 0.0)) {
      r.bounds.push_back(std::numeric_limits<double>::quiet_NaN());
      ++r.excluded;
      continue;
    }
    const double b = p.grad_norm / p.lambda_max;
    r.bounds.push_back(b);
    if (!any || b < r.rho_critical) {
      r.rho_critical = b;
      r.argmin_step = p.step;
      r.argmin_index = i;
      any = true;
    }
  }
  if (!any) throw ConfigError("cor_trajectory: no step with positive lambda_max");
  r.collapsed = r.rho_critical < kCollapseZone;
  return r;
}

double statistical_term(double s) {
  if (std::isnan(s) || s < 0.0) throw ConfigError("statistical term needs s >= 0");
  if (std::isinf(s)) return 1.0;
  return std::sqrt(s / (1.0 + s));
}

DecompositionReport verify_decomposition(const SpectralEstimate& s, double floor, double tol) {
  if (!(s.trace_h > 0.0)) throw NumericalError("decomposition needs Tr(H) > 0");
  if (!(s.lambda_max > 0.0)) throw NumericalError("decomposition needs lambda_max > 0");
  DecompositionReport d;
  const double kappa = s.trace_h / s.lambda_max;
  d.geometric = kappa / std::sqrt(s.trace_h);
  double rad = 1.0 + s.trace_xi / s.trace_h;
  if (rad < -tol) {
    throw WellPosednessError("negative misspecification radicand " + std::to_string(rad));
  }
  d.misspec = std::sqrt(std::max(rad, 0.0));
  d.statistical = statistical_term(s.gsnr);
  d.rhs = d.geometric * d.misspec * d.statistical;
  d.lhs = std::sqrt(s.grad_norm_sq) / s.lambda_max;
  d.rel_gap = std::abs(d.lhs - d.rhs) / std::max(d.lhs, floor);
  return d;
}

PhaseReport phase_detect(std::span<const double> gsnr, std::span<const double> cor_bounds,
                         const PhaseOptions& opt) {
  const std::size_t n = gsnr.size();
  if (n < 10) throw ConfigError("phase_detect needs at least 10 steps");
  if (!cor_bounds.empty() && cor_bounds.size() != n) throw ShapeError("cor bounds length mismatch");
  PhaseReport r;
  std::vector<double> lg(n);
  for (std::size_t t = 0; t < n; ++t) {
    lg[t] = std::log(std::max(gsnr[t], std::numeric_limits<double>::min()));
  }
  const std::size_t half = opt.window / 2;
  r.smoothed.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(n - 1, t + half);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += lg[k];
    r.smoothed[t] = s / static_cast<double>(hi - lo + 1);
  }
  r.slope.assign(n, 0.0);
  for (std::size_t t = 1; t < n; ++t) r.slope[t] = r.smoothed[t] - r.smoothed[t - 1];

  std::size_t run = 0;
  for (std::size_t t = 1; t < n; ++t) {
    run = r.slope[t] > opt.rise_slope ? run + 1 : 0;
    if (run == opt.rise_run) {
      r.rise = t + 1 - opt.rise_run;
      break;
    }
  }
  if (r.rise) {
    run = 0;
    for (std::size_t t = *r.rise + 1; t < n; ++t) {
      run = r.slope[t] < 0.0 ? run + 1 : 0;
      if (run == opt.decay_run) {
        r.decay = t + 1 - opt.decay_run;
        break;
      }
    }
  }
  r.collapse = !r.rise.has_value();
  // Phase (i) keeps at least its first step.
  const std::size_t end = r.rise ? std::max<std::size_t>(*r.rise, 1) : n;
  auto key = [&](std::size_t t) {
    if (cor_bounds.empty()) return gsnr[t];
    return std::isnan(cor_bounds[t]) ? std::numeric_limits<double>::infinity() : cor_bounds[t];
  };
  std::size_t best = 0;
  for (std::size_t t = 1; t < end; ++t) {
    if (key(t) < key(best)) best = t;
  }
  r.t_star = best;
  r.gsnr_at_t_star = gsnr[best];
  return r;
}

}  // namespace corlab::diag
