// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/model/tokens.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "corlab/errors.hpp"

namespace corlab::model {

TokenSequence::TokenSequence(Matrix seq, std::size_t regions, std::size_t layer)
    : seq_(std::move(seq)), regions_(regions), layer_(layer) {
  if (seq_.rows() < 2 + regions_) throw ShapeError("token sequence too short for its layout");
}

TokenSequence TokenSequence::initial(const Matrix& cls, std::size_t regions, const Matrix& visuals) {
  if (cls.shape() != ad::Shape{1, visuals.cols()}) throw ShapeError("cls width mismatch");
  Matrix seq(ad::Shape{1 + regions + visuals.rows(), visuals.cols()});
  std::copy(cls.data().begin(), cls.data().end(), seq.row_span(0).begin());
  for (std::size_t i = 0; i < visuals.rows(); ++i) {
    auto src = visuals.row_span(i);
    std::copy(src.begin(), src.end(), seq.row_span(1 + regions + i).begin());
  }
  return TokenSequence(std::move(seq), regions, 0);
}

std::span<const double> TokenSequence::region(std::size_t k) const {
  if (k >= regions_) throw ShapeError("region token index out of range");
  return seq_.row_span(1 + k);
}

std::span<const double> TokenSequence::visual(std::size_t i) const {
  if (i >= visual_count()) throw ShapeError("visual token index out of range");
  return seq_.row_span(1 + regions_ + i);
}

Matrix TokenSequence::visuals() const {
  const std::size_t n = visual_count();
  std::vector<double> data;
  data.reserve(n * dim());
  for (std::size_t i = 0; i < n; ++i) {
    auto r = visual(i);
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(ad::Shape{n, dim()}, std::move(data));
}

void TokenSequence::set_region(std::size_t k, std::span<const double> value) {
  if (k >= regions_ || value.size() != dim()) throw ShapeError("set_region shape mismatch");
  std::copy(value.begin(), value.end(), seq_.row_span(1 + k).begin());
}

namespace {

void require_finite(const Matrix& m, std::size_t layer) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) throw NumericalError("non-finite activation at layer " + std::to_string(layer));
  }
}

void check_visuals(const FrozenEncoder& enc, const Matrix& visuals) {
  if (visuals.cols() != enc.config().dim) {
    throw ShapeError("visual tokens have width " + std::to_string(visuals.cols()) + ", encoder expects " +
                     std::to_string(enc.config().dim));
  }
  require_finite(visuals, 0);
}

}  // namespace

std::vector<TokenSequence> encode_plain(const FrozenEncoder& enc, const Matrix& visuals) {
  check_visuals(enc, visuals);
  std::vector<TokenSequence> states;
  states.reserve(enc.layers() + 1);
  states.push_back(TokenSequence::initial(enc.cls_embedding(), 0, visuals));
  for (std::size_t l = 1; l <= enc.layers(); ++l) {
    Matrix next = enc.apply_block(l, states.back().matrix());
    require_finite(next, l);
    states.emplace_back(std::move(next), 0, l);
  }
  return states;
}

std::vector<regions::RefinementMask> CoritEncoding::masks() const {
  std::vector<regions::RefinementMask> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l.mask);
  return out;
}

CoritEncoding encode_corit(const FrozenEncoder& enc, const Matrix& orig_visuals,
                           const Matrix& cpart_visuals,
                           std::span<const regions::RegionSpec> regs, double alpha) {
  check_visuals(enc, orig_visuals);
  check_visuals(enc, cpart_visuals);
  if (orig_visuals.shape() != cpart_visuals.shape()) throw ShapeError("stream shapes differ");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  const std::size_t n = orig_visuals.rows();
  const std::size_t k_count = regs.size();
  regions::validate_regions(regs, n, true);

  CoritEncoding out;
  out.original.push_back(TokenSequence::initial(enc.cls_embedding(), k_count, orig_visuals));
  out.counterpart.push_back(TokenSequence::initial(enc.cls_embedding(), k_count, cpart_visuals));

  for (std::size_t l = 1; l <= enc.layers(); ++l) {
    TokenSequence o(enc.apply_block(l, out.original.back().matrix()), k_count, l);
    TokenSequence c(enc.apply_block(l, out.counterpart.back().matrix()), k_count, l);
    require_finite(o.matrix(), l);
    require_finite(c.matrix(), l);

    CoritLayer info;
    info.layer = l;
    const Matrix vo = o.visuals();
    info.cgp = regions::compute_cgp(vo, c.visuals());
    info.mask.regions = k_count;
    info.mask.tokens = n;
    info.mask.bits.assign(k_count * n, 0);
    for (std::size_t k = 0; k < k_count; ++k) {
      auto anc = regions::anchor(info.cgp, regs[k]);
      const auto row = regions::refine_mask(info.cgp, anc, regs[k], alpha);
      std::copy(row.begin(), row.end(), info.mask.bits.begin() + static_cast<std::ptrdiff_t>(k * n));
      const auto pooled = regions::pool(vo, row, regions::kPoolEpsilon);
      const auto hat = o.region(k);
      std::vector<double> r(pooled.size());
      for (std::size_t d = 0; d < r.size(); ++d) r[d] = hat[d] + pooled[d];
      info.anchors.push_back(std::move(anc));
      info.pooled.push_back(pooled);
      o.set_region(k, r);
      c.set_region(k, r);
    }
    out.original.push_back(std::move(o));
    out.counterpart.push_back(std::move(c));
    out.layers.push_back(std::move(info));
  }
  return out;
}

std::vector<double> hri_fuse(std::span<const TokenSequence> states, std::size_t l_mid) {
  if (states.size() < 2) throw ConfigError("hri_fuse needs at least one encoder layer");
  const std::size_t last = states.size() - 1;
  if (l_mid < 1 || l_mid >= last) {
    throw ConfigError("l_mid must satisfy 1 <= l_mid < L (got " + std::to_string(l_mid) + ", L = " +
                      std::to_string(last) + ")");
  }
  std::vector<double> f;
  for (std::size_t l : {l_mid, last}) {
    const auto& s = states[l];
    auto cls = s.cls();
    f.insert(f.end(), cls.begin(), cls.end());
    for (std::size_t k = 0; k < s.region_count(); ++k) {
      auto r = s.region(k);
      f.insert(f.end(), r.begin(), r.end());
    }
  }
  return f;
}

std::vector<double> plain_feature(std::span<const TokenSequence> states) {
  if (states.empty()) throw ConfigError("no encoder states");
  auto cls = states.back().cls();
  return {cls.begin(), cls.end()};
}

double classify(const ProbeHead& head, std::span<const double> feature) {
  if (feature.size() != head.weight.size()) {
    throw ShapeError("feature length " + std::to_string(feature.size()) + " vs head " +
                     std::to_string(head.weight.size()));
  }
  double z = head.bias;
  for (std::size_t i = 0; i < feature.size(); ++i) z += head.weight[i] * feature[i];
  return z;
}

std::size_t corit_feature_dim(std::size_t regions, std::size_t dim) { return 2 * (1 + regions) * dim; }

}  // namespace corlab::model
