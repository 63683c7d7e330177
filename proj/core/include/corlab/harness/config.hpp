// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "corlab/diagnostics/spectral.hpp"
#include "corlab/model/encoder.hpp"
#include "corlab/optim/sam.hpp"
#include "corlab/synth/tasks.hpp"

namespace corlab::harness {

enum class HeadMode { plain, corit };
std::string_view to_string(HeadMode m);
HeadMode head_mode_from_string(std::string_view s);

struct DiagnosticsConfig {
  std::size_t every{10};            // spectral snapshot cadence in steps; 0 disables
  std::size_t trace_probes{30};
  std::size_t power_iters{200};
  double power_tol{1e-8};
  std::size_t dense_threshold{diag::kDenseThreshold};

  friend bool operator==(const DiagnosticsConfig&, const DiagnosticsConfig&) = default;
};

struct CollapseConfig {
  double threshold{0.55};      // train AUC below this counts as chance level
  double tail_fraction{0.1};   // ... when it holds over this final share of steps

  friend bool operator==(const CollapseConfig&, const CollapseConfig&) = default;
};

struct RunConfig {
  synth::TaskSpec task;
  model::EncoderConfig encoder;
  HeadMode head{HeadMode::plain};
  optim::SamConfig optimizer;
  DiagnosticsConfig diagnostics;
  CollapseConfig collapse;
  double alpha{0.0};
  std::size_t l_mid{4};
  double perturb_amp{1.0};       // counterpart op amplitude on the task's artifact channels
  std::string output_dir{"corlab_out"};

  /// Throws ConfigError; also checks that encoder and task shapes agree.
  void validate() const;
  /// Counterpart op used by the CoRIT head.
  [[nodiscard]] synth::CounterpartOp counterpart_op() const;
  [[nodiscard]] diag::SnapshotOptions snapshot_options() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline constexpr int kSchemaVersion = 1;

std::string config_to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown top-level keys are rejected.
RunConfig config_from_json(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace corlab::harness
