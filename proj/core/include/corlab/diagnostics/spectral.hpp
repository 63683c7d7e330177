// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corlab/autodiff/tensor.hpp"
#include "corlab/errors.hpp"
#include "corlab/optim/objective.hpp"

namespace corlab::diag {

using ad::Matrix;

/// v -> H v for a fixed parameter point.
using HvpOracle = std::function<std::vector<double>(std::span<const double>)>;

/// Oracle over the full sample set of `obj` at `w`.
HvpOracle hvp_oracle(const optim::Objective& obj, std::span<const double> w);
/// Oracle for an explicit symmetric matrix.
HvpOracle matrix_oracle(const Matrix& H);

struct GsnrParts {
  std::vector<double> mean;       // g-bar
  double grad_norm_sq{0.0};       // ||g-bar||^2
  double trace_cov_sample{0.0};   // population covariance trace of per-sample gradients
  double trace_cov{0.0};          // trace_cov_sample / B
  double gsnr{0.0};
};

/// GSNR = ||g-bar||^2 / (TrCov / B), population covariance over the M rows.
/// Zero variance gives +inf (nonzero mean) or 0 (zero mean).
GsnrParts gsnr_parts(std::span<const std::vector<double>> per_sample, std::size_t batch_size);
double gsnr(std::span<const std::vector<double>> per_sample, std::size_t batch_size);

struct PowerIterationResult {
  double lambda_max{0.0};       // largest Rayleigh quotient observed
  double last_rayleigh{0.0};
  double residual{0.0};         // ||H v - mu v|| of the final iterate
  std::size_t iterations{0};
  bool converged{false};
  double shift{0.0};            // nonzero when a second, shifted pass was needed
  std::vector<double> vector;   // final unit iterate
};

/// Power iteration for the largest algebraic eigenvalue. A first pass finds
/// the eigenvalue of largest magnitude mu; if mu < 0 a second pass runs on
/// H + |mu| I. Stops when successive Rayleigh quotients agree to `tol`
/// relative. Never throws on non-convergence; see lambda_max().
PowerIterationResult power_iteration(const HvpOracle& H, std::size_t dim, std::size_t iters = 200,
                                     double tol = 1e-8, std::uint64_t seed = 0);

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(double rayleigh, double residual, std::size_t iters);
  [[nodiscard]] double rayleigh() const noexcept { return rayleigh_; }
  [[nodiscard]] double residual() const noexcept { return residual_; }

 private:
  double rayleigh_;
  double residual_;
};

/// power_iteration() that throws NonConvergenceError when the budget runs out.
double lambda_max(const HvpOracle& H, std::size_t dim, std::size_t iters = 200, double tol = 1e-8,
                  std::uint64_t seed = 0);

enum class TraceMode { automatic, exact, hutchinson };

struct TraceEstimate {
  double mean{0.0};
  double std_error{0.0};
  std::size_t probes{0};
  bool exact{false};
};

inline constexpr std::size_t kDenseThreshold = 64;

/// Hutchinson estimate with Rademacher probes, or the exact sum of e_i^T H e_i
/// (automatic mode uses it when dim <= kDenseThreshold).
TraceEstimate hessian_trace(const HvpOracle& H, std::size_t dim, std::size_t probes, std::uint64_t seed = 0,
                            TraceMode mode = TraceMode::automatic);

/// Columns H e_j, symmetrised.
Matrix dense_hessian(const HvpOracle& H, std::size_t dim);

class WellPosednessError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Tr(Xi) = Tr(Cov) + ||grad L||^2 - Tr(H). Throws WellPosednessError when
/// Tr(H) > 0 and 1 + Tr(Xi)/Tr(H) < -tol.
double misspecification_trace(double trace_cov, double grad_norm_sq, double trace_h, double tol = 1e-9);

struct SpectralEstimate {
  std::size_t step{0};
  double lambda_max{0.0};
  double trace_h{0.0};
  double kappa_s{0.0};
  double trace_cov{0.0};
  double grad_norm_sq{0.0};
  double trace_xi{0.0};
  double gsnr{0.0};
  bool exact{false};             // dense trace, converged power iteration
  bool lambda_converged{false};
  double trace_h_std_error{0.0};
};

struct SnapshotOptions {
  std::size_t batch_size{20};
  std::size_t dense_threshold{kDenseThreshold};
  std::size_t trace_probes{30};
  std::size_t power_iters{200};
  double power_tol{1e-8};
  std::uint64_t seed{0};
  bool check_well_posed{true};
};

/// All spectral quantities of `obj` at `w` over its full sample set.
SpectralEstimate spectral_snapshot(const optim::Objective& obj, std::span<const double> w, std::size_t step,
                                   const SnapshotOptions& opt);

}  // namespace corlab::diag
