// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/optim/sam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "corlab/common/format.hpp"
#include "corlab/errors.hpp"

namespace corlab::optim {

void SamConfig::validate() const {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be a finite value >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (steps == 0) throw ConfigError("steps must be positive");
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_(batch_size), rng_(seed) {
  if (batch_ == 0 || batch_ > n_) throw ConfigError("batch size must lie in [1, sample count]");
  perm_.resize(n_);
  reshuffle();
}

void BatchSampler::reshuffle() {
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  std::shuffle(perm_.begin(), perm_.end(), rng_);
  pos_ = 0;
  ++epoch_;
}

std::vector<std::size_t> BatchSampler::next() {
  if (pos_ + batch_ > n_) reshuffle();
  std::vector<std::size_t> b(perm_.begin() + static_cast<std::ptrdiff_t>(pos_),
                             perm_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_));
  pos_ += batch_;
  return b;
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::vector<double> sgd_step(const Objective& obj, std::vector<double>& w, std::span<const std::size_t> batch,
                             double lr) {
  auto g = obj.gradient(w, batch);
  if (!all_finite(g)) throw NumericalError("non-finite gradient in sgd_step");
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
  return g;
}

namespace {

// Gradient g~ at w + rho g/||g||; returns g itself when the perturbation vanishes.
std::vector<double> perturbed_gradient(const Objective& obj, std::span<const double> w,
                                       std::span<const std::size_t> batch, const std::vector<double>& g,
                                       double gnorm, double rho) {
  if (rho == 0.0 || gnorm == 0.0) return g;
  std::vector<double> wp(w.begin(), w.end());
  const double s = rho / gnorm;
  for (std::size_t i = 0; i < wp.size(); ++i) wp[i] += s * g[i];
  return obj.gradient(wp, batch);
}

}  // namespace

StepRecord sam_step(const Objective& obj, std::vector<double>& w, std::span<const std::size_t> batch,
                    double rho, double lr) {
  StepRecord rec;
  rec.rho = rho;
  rec.loss = obj.loss(w, batch);
  const auto g = obj.gradient(w, batch);
  if (!std::isfinite(rec.loss) || !all_finite(g)) {
    rec.failed = true;
    rec.failure = "non-finite loss or gradient at w";
    return rec;
  }
  rec.grad_norm = norm(g);
  const auto pop = obj.gradient(w, obj.all_samples());
  rec.pop_grad_norm = norm(pop);
  const auto gt = perturbed_gradient(obj, w, batch, g, rec.grad_norm, rho);
  if (!all_finite(gt)) {
    rec.failed = true;
    rec.failure = "non-finite gradient at w + eps";
    return rec;
  }
  rec.inner_product = dot(pop, gt);
  rec.collapse_flag = !(rec.inner_product > 0.0);
  std::vector<double> next(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) next[i] = w[i] - lr * gt[i];
  if (!all_finite(next)) {
    rec.failed = true;
    rec.failure = "non-finite parameters after update";
    return rec;
  }
  w = std::move(next);
  return rec;
}

ProbeEstimate stability_probe(const Objective& obj, std::span<const double> w, double rho,
                              std::size_t n_batches, std::size_t batch_size, std::uint64_t seed) {
  if (n_batches < 2) throw ConfigError("stability_probe needs at least 2 batches");
  if (obj.degenerate()) throw ConfigError("stability_probe on a degenerate dataset");
  if (batch_size == 0 || batch_size > obj.sample_count()) throw ConfigError("bad probe batch size");
  const auto pop = obj.gradient(w, obj.all_samples());
  Rng rng(seed);
  std::vector<std::size_t> idx = obj.all_samples();
  std::vector<double> vals;
  vals.reserve(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    // partial Fisher-Yates: a uniform subset without replacement
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::uniform_int_distribution<std::size_t> u(i, idx.size() - 1);
      std::swap(idx[i], idx[u(rng)]);
    }
    const std::span<const std::size_t> batch(idx.data(), batch_size);
    const auto g = obj.gradient(w, batch);
    const auto gt = perturbed_gradient(obj, w, batch, g, norm(g), rho);
    vals.push_back(dot(pop, gt));
  }
  ProbeEstimate e;
  e.batches = n_batches;
  e.pop_grad_norm = norm(pop);
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(vals.size());
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(vals.size() - 1);
  e.mean = mean;
  e.std_error = std::sqrt(var / static_cast<double>(vals.size()));
  return e;
}

namespace {

template <class StepFn>
Trajectory run_loop(const Objective& obj, std::vector<double> w, const SamConfig& cfg, const StepCallback& cb,
                    StepFn&& step) {
  cfg.validate();
  if (w.size() != obj.dim()) throw ShapeError("initial parameters have the wrong dimension");
  BatchSampler sampler(obj.sample_count(), cfg.batch_size, derive_seed(cfg.seed, stream::batches));
  Trajectory tr;
  tr.records.reserve(cfg.steps);
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const auto batch = sampler.next();
    const std::vector<double> before = cb ? w : std::vector<double>{};
    StepRecord rec = step(w, batch);
    rec.step = t;
    if (cb) cb(rec, before);
    tr.records.push_back(rec);
    if (rec.failed) {
      tr.failed = true;
      break;
    }
    tr.last_valid_step = t;
  }
  tr.final_params = std::move(w);
  return tr;
}

}  // namespace

Trajectory run_sam(const Objective& obj, std::vector<double> w0, const SamConfig& cfg, const StepCallback& on_step) {
  return run_loop(obj, std::move(w0), cfg, on_step,
                  [&](std::vector<double>& w, const std::vector<std::size_t>& batch) {
                    return sam_step(obj, w, batch, cfg.rho, cfg.learning_rate);
                  });
}

Trajectory run_sgd(const Objective& obj, std::vector<double> w0, const SamConfig& cfg, const StepCallback& on_step) {
  return run_loop(obj, std::move(w0), cfg, on_step,
                  [&](std::vector<double>& w, const std::vector<std::size_t>& batch) {
                    StepRecord rec;
                    rec.loss = obj.loss(w, batch);
                    const auto pop = obj.gradient(w, obj.all_samples());
                    rec.pop_grad_norm = norm(pop);
                    std::vector<double> g;
                    try {
                      g = sgd_step(obj, w, batch, cfg.learning_rate);
                    } catch (const NumericalError& e) {
                      rec.failed = true;
                      rec.failure = e.what();
                      return rec;
                    }
                    rec.grad_norm = norm(g);
                    rec.inner_product = dot(pop, g);
                    rec.collapse_flag = !(rec.inner_product > 0.0);
                    return rec;
                  });
}

void write_step_csv(std::ostream& out, std::span<const StepRecord> records) {
  out << "step,loss,grad_norm,pop_grad_norm,inner_product,rho\n";
  for (const auto& r : records) {
    out << r.step << ',' << fmt_real(r.loss) << ',' << fmt_real(r.grad_norm) << ',' << fmt_real(r.pop_grad_norm)
        << ',' << fmt_real(r.inner_product) << ',' << fmt_real(r.rho) << '\n';
  }
}

}  // namespace corlab::optim
