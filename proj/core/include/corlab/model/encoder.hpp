// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "corlab/autodiff/param_vector.hpp"
#include "corlab/autodiff/tape.hpp"
#include "corlab/autodiff/tensor.hpp"

namespace corlab::model {

using ad::Matrix;
using ad::Tape;
using ad::Var;

struct EncoderConfig {
  std::size_t layers{6};
  std::size_t dim{32};
  std::size_t heads{4};
  std::size_t visual_tokens{16};
  std::size_t region_count{3};
  std::uint64_t seed{0};
  std::size_t mlp_hidden{64};
  double ln_eps{1e-5};
  // Semantic-bias mode: after every block the listed channels are scaled
  // by (1 - bias_strength), a rank-|channels| attenuation of the stream.
  bool semantic_bias{false};
  double bias_strength{0.5};
  std::vector<std::size_t> bias_channels;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Parameters of one pre-norm transformer block.
struct BlockWeights {
  Matrix ln1_g, ln1_b;
  Matrix wq, wk, wv, wo;
  Matrix ln2_g, ln2_b;
  Matrix w1, b1, w2, b2;

  static constexpr std::size_t kCount = 12;
  [[nodiscard]] std::vector<const Matrix*> all() const;
  [[nodiscard]] std::vector<Matrix*> all();
};

/// Tape handles for a BlockWeights, same field order.
struct BlockVars {
  Var ln1_g, ln1_b, wq, wk, wv, wo, ln2_g, ln2_b, w1, b1, w2, b2;

  static BlockVars from_span(std::span<const Var> v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11]};
  }
};

/// x <- x + MHA(LN1(x));  x <- x + MLP(LN2(x));  then the optional channel gain.
template <class S>
Var transformer_block(Tape<S>& t, const BlockVars& w, Var x, std::size_t heads, double eps,
                      const std::optional<Matrix>& gain) {
  const std::size_t d = t.shape(x).cols;
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  Var h = t.layer_norm_rows(x, w.ln1_g, w.ln1_b, eps);
  Var q = t.matmul(h, w.wq);
  Var k = t.matmul(h, w.wk);
  Var v = t.matmul(h, w.wv);
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t hd = 0; hd < heads; ++hd) {
    std::vector<std::size_t> cols(dh);
    for (std::size_t c = 0; c < dh; ++c) cols[c] = hd * dh + c;
    Var qh = t.gather_cols(q, cols);
    Var kh = t.gather_cols(k, cols);
    Var vh = t.gather_cols(v, cols);
    Var att = t.softmax_rows(t.scale(t.matmul(qh, t.transpose(kh)), inv_sqrt));
    outs.push_back(t.matmul(att, vh));
  }
  x = t.add(x, t.matmul(heads == 1 ? outs.front() : t.concat_cols(outs), w.wo));

  Var h2 = t.layer_norm_rows(x, w.ln2_g, w.ln2_b, eps);
  Var m = t.add_row(t.matmul(t.gelu(t.add_row(t.matmul(h2, w.w1), w.b1)), w.w2), w.b2);
  x = t.add(x, m);
  if (gain) {
    const std::size_t rows = t.shape(x).rows;
    Matrix g(ad::Shape{rows, d});
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < d; ++c) g(r, c) = (*gain)(0, c);
    }
    x = t.mul(x, t.constant(std::move(g)));
  }
  return x;
}

/// Seeded transformer whose parameters never change after construction.
class FrozenEncoder {
 public:
  explicit FrozenEncoder(EncoderConfig cfg);
  FrozenEncoder(EncoderConfig cfg, Matrix cls, std::vector<BlockWeights> blocks);

  [[nodiscard]] const EncoderConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const Matrix& cls_embedding() const noexcept { return cls_; }
  [[nodiscard]] const BlockWeights& block(std::size_t layer) const { return blocks_.at(layer - 1); }
  [[nodiscard]] std::size_t layers() const noexcept { return blocks_.size(); }

  /// 1 x D channel gain of the semantic-bias mode, if enabled.
  [[nodiscard]] const std::optional<Matrix>& channel_gain() const noexcept { return gain_; }

  /// Applies block T_layer (1-based) to a full token sequence.
  [[nodiscard]] Matrix apply_block(std::size_t layer, const Matrix& seq) const;

  /// FNV-1a hash over every parameter byte.
  [[nodiscard]] std::uint64_t fingerprint() const;

  /// All encoder parameters as blocks named "cls", "l1.wq", ...
  [[nodiscard]] ad::ParamVector as_params(bool frozen) const;

  void save(std::ostream& out) const;
  static FrozenEncoder load(std::istream& in);

  /// Zero-weight encoder of the given shape (layer norms keep gamma = 0).
  static FrozenEncoder zeros(EncoderConfig cfg);

 private:
  EncoderConfig cfg_;
  Matrix cls_;
  std::vector<BlockWeights> blocks_;
  std::optional<Matrix> gain_;
};

inline constexpr std::uint32_t kEncoderBlobMagic = 0x4c524f43;  // "CORL"
inline constexpr std::uint32_t kEncoderBlobVersion = 1;

}  // namespace corlab::model
