// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/diagnostics/spectral.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "corlab/common/random.hpp"

namespace corlab::diag {

using optim::dot;
using optim::norm;

HvpOracle hvp_oracle(const optim::Objective& obj, std::span<const double> w) {
  auto params = std::vector<double>(w.begin(), w.end());
  auto all = obj.all_samples();
  return [&obj, params = std::move(params), all = std::move(all)](std::span<const double> v) {
    return obj.hvp(params, all, v);
  };
}

HvpOracle matrix_oracle(const Matrix& H) {
  return [H](std::span<const double> v) {
    if (v.size() != H.cols()) throw ShapeError("matrix oracle dimension mismatch");
    std::vector<double> out(H.rows(), 0.0);
    for (std::size_t r = 0; r < H.rows(); ++r) {
      for (std::size_t c = 0; c < H.cols(); ++c) out[r] += H(r, c) * v[c];
    }
    return out;
  };
}

GsnrParts gsnr_parts(std::span<const std::vector<double>> g, std::size_t batch_size) {
  if (g.size() < 2) throw ConfigError("gsnr needs at least two per-sample gradients");
  if (batch_size == 0) throw ConfigError("gsnr batch size must be positive");
  const std::size_t p = g.front().size();
  const double m = static_cast<double>(g.size());
  GsnrParts out;
  out.mean.assign(p, 0.0);
  for (const auto& row : g) {
    if (row.size() != p) throw ShapeError("ragged per-sample gradient matrix");
    for (std::size_t j = 0; j < p; ++j) out.mean[j] += row[j];
  }
  for (auto& x : out.mean) x /= m;
  out.grad_norm_sq = dot(out.mean, out.mean);
  double tr = 0.0;
  for (const auto& row : g) {
    for (std::size_t j = 0; j < p; ++j) {
      const double d = row[j] - out.mean[j];
      tr += d * d;
    }
  }
  out.trace_cov_sample = tr / m;
  out.trace_cov = out.trace_cov_sample / static_cast<double>(batch_size);
  if (out.trace_cov > 0.0) {
    out.gsnr = out.grad_norm_sq / out.trace_cov;
  } else {
    out.gsnr = out.grad_norm_sq > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return out;
}

double gsnr(std::span<const std::vector<double>> per_sample, std::size_t batch_size) {
  return gsnr_parts(per_sample, batch_size).gsnr;
}

namespace {

struct Pass {
  double best{-std::numeric_limits<double>::infinity()};
  double mu{0.0};
  double residual{0.0};
  std::size_t iters{0};
  bool converged{false};
  std::vector<double> v;
};

Pass run_pass(const HvpOracle& H, std::size_t dim, std::size_t iters, double tol, double shift,
              std::vector<double> v) {
  Pass p;
  double nv = norm(v);
  for (auto& x : v) x /= nv;
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < iters; ++k) {
    auto hv = H(v);
    if (hv.size() != dim) throw ShapeError("hvp oracle returned the wrong dimension");
    const double rq = dot(v, hv);  // Rayleigh quotient of H (v is unit)
    p.best = std::max(p.best, rq);
    double res = 0.0;
    for (std::size_t i = 0; i < dim; ++i) res += (hv[i] - rq * v[i]) * (hv[i] - rq * v[i]);
    p.residual = std::sqrt(res);
    p.mu = rq;
    p.iters = k + 1;
    if (k > 0 && std::abs(rq - prev) <= tol * std::max(std::abs(rq), 1e-300)) {
      p.converged = true;
      p.v = v;
      return p;
    }
    if (p.residual == 0.0) {  // exact eigenvector
      p.converged = true;
      p.v = v;
      return p;
    }
    prev = rq;
    for (std::size_t i = 0; i < dim; ++i) hv[i] += shift * v[i];
    const double nh = norm(hv);
    if (!(nh > 0.0) || !std::isfinite(nh)) {
      // v is in the null space of H + shift I
      p.converged = true;
      p.v = v;
      return p;
    }
    for (std::size_t i = 0; i < dim; ++i) v[i] = hv[i] / nh;
  }
  p.v = v;
  return p;
}

}  // namespace

PowerIterationResult power_iteration(const HvpOracle& H, std::size_t dim, std::size_t iters, double tol,
                                     std::uint64_t seed) {
  if (iters == 0) throw ConfigError("power iteration needs at least one iteration");
  if (dim == 0) throw ConfigError("power iteration on an empty space");
  Rng rng(derive_seed(seed, stream::power_iteration));
  std::normal_distribution<double> nd;
  std::vector<double> v0(dim);
  for (auto& x : v0) x = nd(rng);

  PowerIterationResult out;
  Pass first = run_pass(H, dim, iters, tol, 0.0, v0);
  Pass chosen = first;
  if (first.mu < 0.0) {
    out.shift = std::abs(first.mu);
    Pass second = run_pass(H, dim, iters, tol, out.shift, v0);
    second.best = std::max(second.best, first.best);
    second.iters += first.iters;
    chosen = second;
  }
  out.lambda_max = chosen.best;
  out.last_rayleigh = chosen.mu;
  out.residual = chosen.residual;
  out.iterations = chosen.iters;
  out.converged = chosen.converged;
  out.vector = std::move(chosen.v);
  return out;
}

NonConvergenceError::NonConvergenceError(double rayleigh, double residual, std::size_t iters)
    : NumericalError("power iteration did not converge in " + std::to_string(iters) +
                     " iterations (last Rayleigh quotient " + std::to_string(rayleigh) + ", residual " +
                     std::to_string(residual) + ")"),
      rayleigh_(rayleigh),
      residual_(residual) {}

double lambda_max(const HvpOracle& H, std::size_t dim, std::size_t iters, double tol, std::uint64_t seed) {
  const auto r = power_iteration(H, dim, iters, tol, seed);
  if (!r.converged) throw NonConvergenceError(r.last_rayleigh, r.residual, r.iterations);
  return r.lambda_max;
}

TraceEstimate hessian_trace(const HvpOracle& H, std::size_t dim, std::size_t probes, std::uint64_t seed,
                            TraceMode mode) {
  if (probes == 0) throw ConfigError("hessian_trace needs at least one probe");
  const bool exact = mode == TraceMode::exact || (mode == TraceMode::automatic && dim <= kDenseThreshold);
  TraceEstimate t;
  if (exact) {
    std::vector<double> e(dim, 0.0);
    double tr = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      e[i] = 1.0;
      tr += H(e)[i];
      e[i] = 0.0;
    }
    t.mean = tr;
    t.exact = true;
    t.probes = dim;
    return t;
  }
  Rng rng(derive_seed(seed, stream::probes));
  std::bernoulli_distribution coin(0.5);
  std::vector<double> z(dim);
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < probes; ++k) {
    for (auto& x : z) x = coin(rng) ? 1.0 : -1.0;
    const double q = dot(z, H(z));
    sum += q;
    sq += q * q;
  }
  const double n = static_cast<double>(probes);
  t.mean = sum / n;
  t.probes = probes;
  if (probes > 1) {
    const double var = std::max(0.0, (sq - n * t.mean * t.mean) / (n - 1.0));
    t.std_error = std::sqrt(var / n);
  }
  return t;
}

Matrix dense_hessian(const HvpOracle& H, std::size_t dim) {
  Matrix m(ad::Shape{dim, dim});
  std::vector<double> e(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    e[j] = 1.0;
    const auto col = H(e);
    for (std::size_t i = 0; i < dim; ++i) m(i, j) = col[i];
    e[j] = 0.0;
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double s = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = m(j, i) = s;
    }
  }
  return m;
}

double misspecification_trace(double trace_cov, double grad_norm_sq, double trace_h, double tol) {
  const double xi = trace_cov + grad_norm_sq - trace_h;
  if (trace_h > 0.0 && 1.0 + xi / trace_h < -tol) {
    throw WellPosednessError("misspecification term is ill-posed: 1 + Tr(Xi)/Tr(H) = " +
                             std::to_string(1.0 + xi / trace_h));
  }
  return xi;
}

SpectralEstimate spectral_snapshot(const optim::Objective& obj, std::span<const double> w, std::size_t step,
                                   const SnapshotOptions& opt) {
  const auto all = obj.all_samples();
  const auto per_sample = obj.per_sample_gradients(w, all);
  const auto parts = gsnr_parts(per_sample, opt.batch_size);

  const auto H = hvp_oracle(obj, w);
  const std::size_t p = obj.dim();
  const auto pi = power_iteration(H, p, opt.power_iters, opt.power_tol, derive_seed(opt.seed, step));
  const auto tr = hessian_trace(H, p, opt.trace_probes, derive_seed(opt.seed, step),
                                p <= opt.dense_threshold ? TraceMode::exact : TraceMode::hutchinson);

  SpectralEstimate s;
  s.step = step;
  s.lambda_max = pi.lambda_max;
  s.lambda_converged = pi.converged;
  s.trace_h = tr.mean;
  s.trace_h_std_error = tr.std_error;
  s.kappa_s = s.lambda_max > 0.0 ? s.trace_h / s.lambda_max : std::numeric_limits<double>::quiet_NaN();
  s.trace_cov = parts.trace_cov;
  s.grad_norm_sq = parts.grad_norm_sq;
  s.gsnr = parts.gsnr;
  s.trace_xi = opt.check_well_posed ? misspecification_trace(s.trace_cov, s.grad_norm_sq, s.trace_h)
                                    : s.trace_cov + s.grad_norm_sq - s.trace_h;
  s.exact = tr.exact && pi.converged;
  return s;
}

}  // namespace corlab::diag
