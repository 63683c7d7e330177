// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corlab/autodiff/tensor.hpp"
#include "corlab/regions/regions.hpp"

namespace corlab::synth {

using ad::Matrix;
using regions::RegionLabel;

/// Synthetic real/fake token task. Channel indices are 0-based.
struct TaskSpec {
  std::size_t n_tokens{16};
  std::size_t dim{32};
  double semantic_amp{0.0};
  double artifact_amp{1.0};
  std::vector<std::size_t> artifact_channels{0, 1, 2, 3};
  RegionLabel artifact_region{RegionLabel::foreground};
  double noise_sigma{1.0};
  std::size_t n_train{200};
  std::size_t n_test{200};
  std::uint64_t seed{0};

  void validate() const;
  /// sqrt(n_tokens); the grid must be square with side >= 3.
  [[nodiscard]] std::size_t side() const;
  /// Channels not listed in artifact_channels, ascending.
  [[nodiscard]] std::vector<std::size_t> semantic_channels() const;
  [[nodiscard]] regions::RegionSpec region() const;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

enum class Split { train, test };
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct Sample {
  Matrix tokens;   // N x D
  std::uint8_t label{0};  // 0 real, 1 fake
};

struct Dataset {
  TaskSpec spec;
  Split split{Split::train};
  std::vector<Matrix> tokens;
  std::vector<std::uint8_t> labels;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] Sample sample(std::size_t i) const { return {tokens.at(i), labels.at(i)}; }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Seeded N x D pattern supported on tokens x channels with unit Frobenius
/// norm; the sign is fixed so the first nonzero entry is positive.
Matrix structured_pattern(std::uint64_t seed, std::size_t n_tokens, std::size_t dim,
                          std::span<const std::size_t> tokens, std::span<const std::size_t> channels);

/// Unit vector over the semantic channels, repeated on every token.
Matrix semantic_pattern(const TaskSpec& spec);
/// Unit Frobenius pattern on artifact_region x artifact_channels.
Matrix artifact_pattern(const TaskSpec& spec);

/// Sample i of a split; label i % 2.
Sample generate_sample(const TaskSpec& spec, Split split, std::size_t index);
Dataset generate(const TaskSpec& spec, Split split);

struct CounterpartOp {
  double perturb_amp{1.0};
  std::vector<std::size_t> target_channels;
  RegionLabel target_region{RegionLabel::foreground};
  std::uint64_t seed{0};

  friend bool operator==(const CounterpartOp&, const CounterpartOp&) = default;
};

/// Targets the task's artifact channels and region with the task seed, so
/// the added pattern is the artifact pattern itself.
CounterpartOp default_counterpart(const TaskSpec& spec, double perturb_amp = 1.0);

Matrix counterpart_pattern(const CounterpartOp& op, std::size_t n_tokens, std::size_t dim);
Sample counterpart(const Sample& s, const CounterpartOp& op);

/// Monte-Carlo GSNR of a logistic probe at w = 0 on the flattened tokens.
double expected_gsnr(const TaskSpec& spec, std::size_t mc_samples = 10000, std::size_t batch_size = 20);

// Binary layout: "CLDS", u32 version, u64 header length, JSON header,
// n*N*D little-endian f64 row-major, n label bytes.
void write_dataset(std::ostream& out, const Dataset& ds);
Dataset read_dataset(std::istream& in);
/// sample,label,token,c0..c{D-1}
void dump_csv(std::ostream& out, const Dataset& ds);

std::string task_spec_to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(std::string_view text);

}  // namespace corlab::synth
