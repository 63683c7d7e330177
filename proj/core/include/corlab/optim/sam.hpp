// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "corlab/common/random.hpp"
#include "corlab/optim/objective.hpp"

namespace corlab::optim {

struct SamConfig {
  double rho{0.0};
  double learning_rate{1e-3};
  std::size_t batch_size{20};
  std::size_t steps{100};
  std::uint64_t seed{0};

  void validate() const;
  friend bool operator==(const SamConfig&, const SamConfig&) = default;
};

struct StepRecord {
  std::size_t step{0};
  double loss{0.0};           // mini-batch loss at w_t
  double grad_norm{0.0};      // ||g_t||
  double pop_grad_norm{0.0};  // ||grad L(w_t)|| on the full sample set
  double inner_product{0.0};  // <grad L(w_t), g~_t>
  double rho{0.0};
  bool collapse_flag{false};  // <grad L, g~> <= 0: the update does not descend in expectation
  bool failed{false};
  std::string failure;        // which evaluation went non-finite
};

/// Uniform sampling without replacement within an epoch. When fewer than
/// batch_size unused indices remain, the epoch ends and a new permutation
/// is drawn (the remainder is dropped).
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::size_t> next();
  [[nodiscard]] std::size_t epoch() const noexcept { return epoch_; }

 private:
  void reshuffle();

  std::size_t n_;
  std::size_t batch_;
  Rng rng_;
  std::vector<std::size_t> perm_;
  std::size_t pos_{0};
  std::size_t epoch_{0};
};

/// w <- w - lr g. Returns g.
std::vector<double> sgd_step(const Objective& obj, std::vector<double>& w,
                             std::span<const std::size_t> batch, double lr);

/// One SAM step on `batch`: g at w, eps = rho g/||g|| (0 if g = 0 or rho = 0),
/// g~ at w + eps on the same batch, w <- w - lr g~.
/// Non-finite values leave w untouched and return a failed record.
StepRecord sam_step(const Objective& obj, std::vector<double>& w, std::span<const std::size_t> batch,
                    double rho, double lr);

struct ProbeEstimate {
  double mean{0.0};
  double std_error{0.0};
  double pop_grad_norm{0.0};
  std::size_t batches{0};
};

/// Monte-Carlo estimate of E[<grad L(w), g~>] over fresh mini-batches.
ProbeEstimate stability_probe(const Objective& obj, std::span<const double> w, double rho,
                              std::size_t n_batches, std::size_t batch_size, std::uint64_t seed);

using StepCallback = std::function<void(const StepRecord&, std::span<const double> w)>;

struct Trajectory {
  std::vector<StepRecord> records;
  std::vector<double> final_params;
  bool failed{false};
  std::size_t last_valid_step{0};
};

/// cfg.steps SAM steps from w0. The callback sees each record and the
/// parameters before that step's update.
Trajectory run_sam(const Objective& obj, std::vector<double> w0, const SamConfig& cfg,
                   const StepCallback& on_step = {});

/// Same loop with plain SGD steps; records carry rho = 0.
Trajectory run_sgd(const Objective& obj, std::vector<double> w0, const SamConfig& cfg,
                   const StepCallback& on_step = {});

void write_step_csv(std::ostream& out, std::span<const StepRecord> records);

}  // namespace corlab::optim
