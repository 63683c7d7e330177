// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/autodiff/param_vector.hpp"

#include <algorithm>

#include "corlab/errors.hpp"

namespace corlab::ad {

std::size_t ParamVector::add(std::string name, Matrix value, bool frozen) {
  const auto dup = std::find_if(blocks_.begin(), blocks_.end(),
                                [&](const Block& b) { return b.name == name; });
  if (dup != blocks_.end()) throw ConfigError("duplicate parameter block '" + name + "'");
  offsets_.push_back(dim_);
  if (!frozen) dim_ += value.size();
  blocks_.push_back(Block{std::move(name), std::move(value), frozen});
  grad_.assign(dim_, 0.0);
  return blocks_.size() - 1;
}

const ParamVector::Block& ParamVector::block(const std::string& name) const {
  return blocks_[index_of(name)];
}

std::size_t ParamVector::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return i;
  }
  throw ConfigError("no parameter block named '" + name + "'");
}

std::size_t ParamVector::offset(std::size_t block) const {
  if (blocks_.at(block).frozen) throw ConfigError("frozen block has no flat offset");
  return offsets_[block];
}

std::vector<double> ParamVector::flatten() const {
  std::vector<double> flat;
  flat.reserve(dim_);
  for (const auto& b : blocks_) {
    if (b.frozen) continue;
    const auto d = b.value.data();
    flat.insert(flat.end(), d.begin(), d.end());
  }
  return flat;
}

void ParamVector::unflatten(std::span<const double> flat) {
  if (flat.size() != dim_) {
    throw ShapeError("unflatten: expected " + std::to_string(dim_) + " values, got " +
                     std::to_string(flat.size()));
  }
  std::size_t pos = 0;
  for (auto& b : blocks_) {
    if (b.frozen) continue;
    auto d = b.value.data();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), d.size(), d.begin());
    pos += d.size();
  }
}

void ParamVector::zero_gradient() { std::fill(grad_.begin(), grad_.end(), 0.0); }

}  // namespace corlab::ad
