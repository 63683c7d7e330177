// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/model/toy_loss.hpp"

#include "corlab/errors.hpp"

namespace corlab::model {

ad::ParamVector toy_model_params(const FrozenEncoder& enc, const ProbeHead& head) {
  if (head.feature_dim() != enc.config().dim) throw ShapeError("head width must equal D");
  ad::ParamVector p = enc.as_params(false);
  p.add("head_w", Matrix::column(head.weight));
  p.add("head_b", Matrix::scalar(head.bias));
  return p;
}

ToyModelLoss toy_model_loss(const FrozenEncoder& enc, std::vector<double> labels) {
  const auto& c = enc.config();
  return ToyModelLoss{c.layers, c.heads, c.visual_tokens, c.ln_eps, std::move(labels), enc.channel_gain()};
}

}  // namespace corlab::model
