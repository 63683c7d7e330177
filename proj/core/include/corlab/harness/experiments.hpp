// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corlab/diagnostics/cor.hpp"
#include "corlab/diagnostics/spectral.hpp"
#include "corlab/harness/config.hpp"
#include "corlab/harness/run.hpp"

namespace corlab::harness {

struct SweepOptions {
  std::size_t seeds{3};          // runs per probed rho; collapse by majority vote
  double resolution{1e-3};       // bisection stops when the bracket is this narrow
  bool bisect{true};
};

struct SweepPoint {
  double rho{0.0};
  double train_auc{0.0};   // mean over seeds
  double test_auc{0.0};
  std::size_t collapsed_votes{0};
  std::size_t runs{0};
  bool collapsed{false};
  bool from_bisection{false};
};

enum class SweepBracket { bracketed, all_collapsed, none_collapsed };
std::string_view to_string(SweepBracket b);

struct SweepResult {
  std::vector<SweepPoint> points;        // listed rhos first, then bisection probes
  double empirical_cor{0.0};
  SweepBracket bracket{SweepBracket::bracketed};
  std::optional<diag::CorReport> theoretical;   // from the run at the smallest listed rho
  std::vector<double> monotonicity_violations;  // non-collapsed rhos above a collapsed one
};

struct BoundarySearch {
  std::vector<std::pair<double, bool>> probes;  // (rho, collapsed) in evaluation order
  double boundary{0.0};
  SweepBracket bracket{SweepBracket::bracketed};
  std::vector<double> violations;               // non-collapsed listed rhos above a collapsed one
};

/// Evaluates `collapsed` on the ascending list, then bisects between the
/// last stable and the first collapsed value until the bracket is narrower
/// than `resolution`. Boundary is the bracket midpoint, or the list end
/// matching the flag when nothing is bracketed.
BoundarySearch find_collapse_boundary(std::span<const double> rho_list,
                                      const std::function<bool(double)>& collapsed, double resolution,
                                      bool bisect = true);

/// Independent seeded runs per rho on shared features, then bisection of
/// the first collapse boundary. rho_list must be ascending with >= 3 values.
SweepResult sweep_rho(const RunConfig& cfg, std::span<const double> rho_list, const SweepOptions& opt = {});
SweepResult sweep_rho(const RunConfig& cfg, const FeatureSet& features, std::span<const double> rho_list,
                      const SweepOptions& opt = {});

/// Majority vote over `seeds` optimizer seeds at one rho.
SweepPoint probe_rho(const RunConfig& cfg, const FeatureSet& features, double rho, std::size_t seeds);

struct TheoremInstance {
  std::size_t index{0};
  std::uint64_t seed{0};
  std::size_t samples{0};
  std::size_t features{0};
  std::size_t classes{0};
  diag::SpectralEstimate estimate;
  std::optional<diag::DecompositionReport> decomposition;
  double radicand{0.0};          // 1 + Tr(Xi)/Tr(H)
  bool well_posed{false};
  bool passed{false};
  std::string message;
};

struct TheoremReport {
  std::vector<TheoremInstance> instances;
  std::size_t passed{0};
  double max_rel_gap{0.0};
  double tolerance{1e-6};
  [[nodiscard]] bool all_passed() const noexcept { return passed == instances.size(); }
};

struct TheoremOptions {
  double tolerance{1e-6};
  double well_posed_tol{1e-9};
  std::size_t max_params{50};
};

/// Random softmax-regression instances in exact dense mode with B = 1.
TheoremReport verify_theorem_campaign(std::size_t n_instances, std::uint64_t seed, const TheoremOptions& opt = {});
TheoremInstance verify_theorem_instance(const optim::SoftmaxObjective& obj, std::span<const double> w,
                                        const TheoremOptions& opt = {});

struct HeadSummary {
  HeadMode head{HeadMode::plain};
  double theoretical_cor{0.0};
  std::size_t argmin_step{0};
  double final_train_auc{0.0};
  double final_test_auc{0.0};
  bool collapsed{false};
  std::optional<double> empirical_cor;
  std::optional<SweepBracket> bracket;
};

struct CompareReport {
  HeadSummary plain;
  HeadSummary corit;
  [[nodiscard]] bool corit_higher() const noexcept { return corit.theoretical_cor > plain.theoretical_cor; }
};

/// Runs `cfg` once per head mode. With a rho list, empirical CORs come from
/// sweep_rho as well.
CompareReport corit_vs_baseline(const RunConfig& cfg, std::span<const double> rho_list = {},
                                const SweepOptions& opt = {});

std::string sweep_json(const RunConfig& cfg, const SweepResult& r);
std::string theorem_json(const TheoremReport& r);
std::string compare_json(const RunConfig& cfg, const CompareReport& r);

}  // namespace corlab::harness
