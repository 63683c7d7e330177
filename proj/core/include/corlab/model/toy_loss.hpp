// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "corlab/autodiff/param_vector.hpp"
#include "corlab/model/encoder.hpp"
#include "corlab/model/tokens.hpp"

namespace corlab::model {

/// Whole toy model as one differentiable program: encoder blocks, CLS
/// readout and a logistic head, mean BCE over a stack of samples.
///
/// Blocks are [cls, 12 per layer..., head_w (D x 1), head_b (1 x 1)];
/// the input is the samples' visual tokens stacked row-wise.
struct ToyModelLoss {
  std::size_t layers{0};
  std::size_t heads{1};
  std::size_t tokens{1};
  double eps{1e-5};
  std::vector<double> labels;
  std::optional<Matrix> gain;

  template <class S>
  Var operator()(Tape<S>& t, std::span<const Var> b, Var x) const {
    std::vector<Var> logits;
    logits.reserve(labels.size());
    const Var head_w = b[1 + BlockWeights::kCount * layers];
    const Var head_b = b[2 + BlockWeights::kCount * layers];
    for (std::size_t s = 0; s < labels.size(); ++s) {
      std::vector<std::size_t> rows(tokens);
      for (std::size_t i = 0; i < tokens; ++i) rows[i] = s * tokens + i;
      Var seq = t.concat_rows({b[0], t.gather_rows(x, rows)});
      for (std::size_t l = 0; l < layers; ++l) {
        const auto w = BlockVars::from_span(b.subspan(1 + BlockWeights::kCount * l, BlockWeights::kCount));
        seq = transformer_block(t, w, seq, heads, eps, gain);
      }
      logits.push_back(t.matmul(t.gather_rows(seq, {0}), head_w));
    }
    return t.bce_with_logits(t.add_row(t.concat_rows(logits), head_b), labels);
  }
};

/// Encoder parameters (trainable) followed by the head, for ToyModelLoss.
ad::ParamVector toy_model_params(const FrozenEncoder& enc, const ProbeHead& head);

ToyModelLoss toy_model_loss(const FrozenEncoder& enc, std::vector<double> labels);

}  // namespace corlab::model
