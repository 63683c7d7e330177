// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "corlab/autodiff/tensor.hpp"
#include "corlab/model/encoder.hpp"
#include "corlab/regions/regions.hpp"

namespace corlab::model {

/// Token layout [CLS | R_1..R_K | V_1..V_N] at one layer, stored as one
/// (1 + K + N) x D matrix.
class TokenSequence {
 public:
  TokenSequence(Matrix seq, std::size_t regions, std::size_t layer);

  /// Layer-0 sequence: CLS embedding, K zero region tokens, the visuals.
  static TokenSequence initial(const Matrix& cls, std::size_t regions, const Matrix& visuals);

  [[nodiscard]] const Matrix& matrix() const noexcept { return seq_; }
  [[nodiscard]] Matrix& matrix() noexcept { return seq_; }
  [[nodiscard]] std::size_t layer() const noexcept { return layer_; }
  [[nodiscard]] std::size_t region_count() const noexcept { return regions_; }
  [[nodiscard]] std::size_t visual_count() const noexcept { return seq_.rows() - 1 - regions_; }
  [[nodiscard]] std::size_t dim() const noexcept { return seq_.cols(); }

  [[nodiscard]] std::span<const double> cls() const { return seq_.row_span(0); }
  [[nodiscard]] std::span<const double> region(std::size_t k) const;
  [[nodiscard]] std::span<const double> visual(std::size_t i) const;
  /// Copy of the N x D visual block.
  [[nodiscard]] Matrix visuals() const;

  void set_region(std::size_t k, std::span<const double> value);
  void set_layer(std::size_t l) noexcept { layer_ = l; }

 private:
  Matrix seq_;
  std::size_t regions_;
  std::size_t layer_;
};

/// L + 1 snapshots with K = 0.
std::vector<TokenSequence> encode_plain(const FrozenEncoder& enc, const Matrix& visuals);

struct CoritLayer {
  std::size_t layer{0};
  Matrix cgp;                                   // N x D, counterpart - original
  std::vector<regions::RegionAnchor> anchors;   // one per region
  regions::RefinementMask mask;                 // K x N
  std::vector<std::vector<double>> pooled;      // r_k, K x D
};

struct CoritEncoding {
  std::vector<TokenSequence> original;     // L + 1 snapshots, R already updated
  std::vector<TokenSequence> counterpart;  // L + 1 snapshots
  std::vector<CoritLayer> layers;          // entries for l = 1..L

  [[nodiscard]] std::vector<regions::RefinementMask> masks() const;
};

/// Paired forward with region refinement and region-token injection.
///
/// Both streams carry the same region tokens into every block, so only the
/// visual tokens can differ between them. After block l the region tokens
/// of the original stream are replaced by R-hat + r.
CoritEncoding encode_corit(const FrozenEncoder& enc, const Matrix& orig_visuals,
                           const Matrix& cpart_visuals,
                           std::span<const regions::RegionSpec> regions, double alpha);

/// concat([CLS, R] at l_mid, [CLS, R] at L). L is states.size() - 1.
std::vector<double> hri_fuse(std::span<const TokenSequence> states, std::size_t l_mid);

/// CLS token of the last snapshot.
std::vector<double> plain_feature(std::span<const TokenSequence> states);

struct ProbeHead {
  std::vector<double> weight;
  double bias{0.0};

  [[nodiscard]] std::size_t feature_dim() const noexcept { return weight.size(); }
};

double classify(const ProbeHead& head, std::span<const double> feature);

/// Feature dimension the head must have: D (plain) or 2 (1 + K) D.
std::size_t corit_feature_dim(std::size_t regions, std::size_t dim);

}  // namespace corlab::model
