// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/model/encoder.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "corlab/common/binary_io.hpp"
#include "corlab/common/random.hpp"
#include "corlab/errors.hpp"

namespace corlab::model {

void EncoderConfig::validate() const {
  if (dim == 0 || heads == 0 || visual_tokens == 0 || mlp_hidden == 0) {
    throw ConfigError("encoder dim, heads, visual_tokens and mlp_hidden must be positive");
  }
  if (dim % heads != 0) {
    throw ConfigError("encoder dim " + std::to_string(dim) + " not divisible by heads " +
                      std::to_string(heads));
  }
  if (!(ln_eps > 0.0)) throw ConfigError("layer-norm epsilon must be positive");
  if (semantic_bias) {
    if (!(bias_strength >= 0.0 && bias_strength <= 1.0)) {
      throw ConfigError("bias_strength must lie in [0, 1]");
    }
    for (auto c : bias_channels) {
      if (c >= dim) throw ConfigError("bias channel " + std::to_string(c) + " out of range");
    }
  }
}

std::vector<const Matrix*> BlockWeights::all() const {
  return {&ln1_g, &ln1_b, &wq, &wk, &wv, &wo, &ln2_g, &ln2_b, &w1, &b1, &w2, &b2};
}

std::vector<Matrix*> BlockWeights::all() {
  return {&ln1_g, &ln1_b, &wq, &wk, &wv, &wo, &ln2_g, &ln2_b, &w1, &b1, &w2, &b2};
}

namespace {

Matrix gaussian(Rng& rng, std::size_t r, std::size_t c, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  Matrix m(ad::Shape{r, c});
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = n(rng);
  return m;
}

std::optional<Matrix> make_gain(const EncoderConfig& cfg) {
  if (!cfg.semantic_bias) return std::nullopt;
  Matrix g(ad::Shape{1, cfg.dim}, 1.0);
  for (auto c : cfg.bias_channels) g(0, c) = 1.0 - cfg.bias_strength;
  return g;
}

constexpr const char* kBlockNames[BlockWeights::kCount] = {
    "ln1_g", "ln1_b", "wq", "wk", "wv", "wo", "ln2_g", "ln2_b", "w1", "b1", "w2", "b2"};

}  // namespace

FrozenEncoder::FrozenEncoder(EncoderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.seed, stream::encoder));
  const std::size_t d = cfg_.dim;
  const std::size_t h = cfg_.mlp_hidden;
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  const double sh = 1.0 / std::sqrt(static_cast<double>(h));
  cls_ = gaussian(rng, 1, d, 1.0);
  blocks_.reserve(cfg_.layers);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    BlockWeights b;
    b.ln1_g = Matrix(ad::Shape{1, d}, 1.0);
    b.ln1_b = Matrix(ad::Shape{1, d});
    b.wq = gaussian(rng, d, d, sd);
    b.wk = gaussian(rng, d, d, sd);
    b.wv = gaussian(rng, d, d, sd);
    b.wo = gaussian(rng, d, d, sd);
    b.ln2_g = Matrix(ad::Shape{1, d}, 1.0);
    b.ln2_b = Matrix(ad::Shape{1, d});
    b.w1 = gaussian(rng, d, h, sd);
    b.b1 = Matrix(ad::Shape{1, h});
    b.w2 = gaussian(rng, h, d, sh);
    b.b2 = Matrix(ad::Shape{1, d});
    blocks_.push_back(std::move(b));
  }
  gain_ = make_gain(cfg_);
}

FrozenEncoder::FrozenEncoder(EncoderConfig cfg, Matrix cls, std::vector<BlockWeights> blocks)
    : cfg_(std::move(cfg)), cls_(std::move(cls)), blocks_(std::move(blocks)) {
  cfg_.validate();
  if (blocks_.size() != cfg_.layers) throw ConfigError("encoder block count does not match layers");
  if (cls_.shape() != ad::Shape{1, cfg_.dim}) throw ShapeError("cls embedding must be 1 x D");
  gain_ = make_gain(cfg_);
}

FrozenEncoder FrozenEncoder::zeros(EncoderConfig cfg) {
  cfg.validate();
  const std::size_t d = cfg.dim;
  const std::size_t h = cfg.mlp_hidden;
  std::vector<BlockWeights> blocks(cfg.layers);
  for (auto& b : blocks) {
    b.ln1_g = b.ln1_b = b.ln2_g = b.ln2_b = b.b2 = Matrix(ad::Shape{1, d});
    b.wq = b.wk = b.wv = b.wo = Matrix(ad::Shape{d, d});
    b.w1 = Matrix(ad::Shape{d, h});
    b.b1 = Matrix(ad::Shape{1, h});
    b.w2 = Matrix(ad::Shape{h, d});
  }
  Matrix cls(ad::Shape{1, d});
  return FrozenEncoder(std::move(cfg), std::move(cls), std::move(blocks));
}

Matrix FrozenEncoder::apply_block(std::size_t layer, const Matrix& seq) const {
  if (layer == 0 || layer > blocks_.size()) throw ConfigError("layer index out of range");
  if (seq.cols() != cfg_.dim) throw ShapeError("token width " + std::to_string(seq.cols()));
  Tape<double> t(ad::TapeMode::inference);
  std::vector<Var> vars;
  for (const Matrix* m : block(layer).all()) vars.push_back(t.constant(*m));
  const Var x = t.constant(seq);
  const Var y = transformer_block(t, BlockVars::from_span(vars), x, cfg_.heads, cfg_.ln_eps, gain_);
  return t.value(y);
}

std::uint64_t FrozenEncoder::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const Matrix& m) {
    for (double v : m.data()) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  };
  mix(cls_);
  for (const auto& b : blocks_) {
    for (const Matrix* m : b.all()) mix(*m);
  }
  return h;
}

ad::ParamVector FrozenEncoder::as_params(bool frozen) const {
  ad::ParamVector p;
  p.add("cls", cls_, frozen);
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const auto ms = blocks_[l].all();
    for (std::size_t i = 0; i < ms.size(); ++i) {
      p.add("l" + std::to_string(l + 1) + "." + kBlockNames[i], *ms[i], frozen);
    }
  }
  return p;
}

void FrozenEncoder::save(std::ostream& out) const {
  io::write_u32(out, kEncoderBlobMagic);
  io::write_u32(out, kEncoderBlobVersion);
  io::write_u64(out, cfg_.layers);
  io::write_u64(out, cfg_.dim);
  io::write_u64(out, cfg_.heads);
  io::write_u64(out, cfg_.visual_tokens);
  io::write_u64(out, cfg_.region_count);
  io::write_u64(out, cfg_.mlp_hidden);
  io::write_f64(out, cfg_.ln_eps);
  io::write_u64(out, cfg_.semantic_bias ? 1 : 0);
  io::write_f64(out, cfg_.bias_strength);
  io::write_u64(out, cfg_.bias_channels.size());
  for (auto c : cfg_.bias_channels) io::write_u64(out, c);
  io::write_u64(out, cfg_.seed);
  for (double v : cls_.data()) io::write_f64(out, v);
  for (const auto& b : blocks_) {
    for (const Matrix* m : b.all()) {
      for (double v : m->data()) io::write_f64(out, v);
    }
  }
}

FrozenEncoder FrozenEncoder::load(std::istream& in) {
  if (io::read_u32(in) != kEncoderBlobMagic) throw ConfigError("not an encoder blob (bad magic)");
  const auto version = io::read_u32(in);
  if (version != kEncoderBlobVersion) {
    throw ConfigError("unsupported encoder blob version " + std::to_string(version));
  }
  EncoderConfig cfg;
  cfg.layers = io::read_u64(in);
  cfg.dim = io::read_u64(in);
  cfg.heads = io::read_u64(in);
  cfg.visual_tokens = io::read_u64(in);
  cfg.region_count = io::read_u64(in);
  cfg.mlp_hidden = io::read_u64(in);
  cfg.ln_eps = io::read_f64(in);
  cfg.semantic_bias = io::read_u64(in) != 0;
  cfg.bias_strength = io::read_f64(in);
  const auto nb = io::read_u64(in);
  if (nb > cfg.dim) throw ConfigError("corrupt encoder blob (bias channel count)");
  cfg.bias_channels.resize(nb);
  for (auto& c : cfg.bias_channels) c = io::read_u64(in);
  cfg.seed = io::read_u64(in);
  cfg.validate();

  // Shapes come from a zero encoder of the same configuration.
  FrozenEncoder shell = zeros(cfg);
  Matrix cls = shell.cls_;
  for (auto& v : cls.data()) v = io::read_f64(in);
  std::vector<BlockWeights> blocks = shell.blocks_;
  for (auto& b : blocks) {
    for (Matrix* m : b.all()) {
      for (auto& v : m->data()) v = io::read_f64(in);
    }
  }
  return FrozenEncoder(std::move(cfg), std::move(cls), std::move(blocks));
}

}  // namespace corlab::model
