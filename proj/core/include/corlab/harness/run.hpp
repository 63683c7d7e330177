// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "corlab/diagnostics/cor.hpp"
#include "corlab/diagnostics/spectral.hpp"
#include "corlab/harness/config.hpp"
#include "corlab/model/encoder.hpp"
#include "corlab/optim/sam.hpp"

namespace corlab::harness {

using ad::Matrix;

/// Frozen-encoder features of both splits.
struct FeatureSet {
  Matrix train;
  Matrix test;
  std::vector<double> train_labels;
  std::vector<double> test_labels;
};

/// Plain: last-layer CLS. CoRIT: HRI fusion of the paired forward with the
/// counterpart generated from each input.
FeatureSet extract_features(const RunConfig& cfg, const model::FrozenEncoder& enc);
FeatureSet extract_features(const RunConfig& cfg);

struct StepRow {
  std::size_t step{0};
  double loss{0.0};        // mini-batch loss at w_t
  double train_auc{0.0};   // AUC of w_t on the whole training split
  double grad_norm{0.0};   // ||grad L(w_t)|| over the training split
  double gsnr{0.0};
};

struct DiagnosticRecord {
  diag::SpectralEstimate estimate;
  double cor_bound{0.0};
  std::optional<diag::DecompositionReport> decomposition;
  std::string error;       // set when the decomposition is not defined
};

struct RunResult {
  std::vector<StepRow> steps;
  std::vector<DiagnosticRecord> diagnostics;
  std::optional<diag::CorReport> cor;
  std::optional<diag::PhaseReport> phases;
  std::vector<double> final_params;
  double final_train_auc{0.0};
  double final_test_auc{0.0};
  bool collapsed{false};
  bool failed{false};
  std::string failure;
  std::size_t last_valid_step{0};
  std::vector<std::string> warnings;
};

/// Trains the probe head on precomputed features.
RunResult run_on_features(const RunConfig& cfg, const FeatureSet& features);
/// Generates data, extracts features and trains.
RunResult run_train(const RunConfig& cfg);

/// Collapse rule: every train AUC in the final tail_fraction of steps is
/// below the threshold.
bool is_collapsed(const std::vector<StepRow>& steps, const CollapseConfig& c);

void write_steps_csv(std::ostream& out, const std::vector<StepRow>& steps);
std::string diagnostics_json(const std::vector<DiagnosticRecord>& diags);
std::string summary_json(const RunConfig& cfg, const RunResult& r);
/// steps.csv, diagnostics.json and summary.json under `dir`.
void write_run_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const RunResult& r);

}  // namespace corlab::harness
