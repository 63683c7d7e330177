// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

// nlohmann::json adapters for the public config structs. Private to the
// library; the public headers expose string-based entry points only.

#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "corlab/errors.hpp"
#include "corlab/model/encoder.hpp"
#include "corlab/optim/sam.hpp"
#include "corlab/regions/regions.hpp"
#include "corlab/synth/tasks.hpp"

namespace corlab::codec {

using nlohmann::json;

// Optional field: keeps the default when absent, rejects wrong types.
template <class T>
void read_opt(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

// Non-finite values are written as the strings "inf", "-inf", "nan".
inline json real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline json parse(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace corlab::codec

namespace corlab::regions {
inline void to_json(nlohmann::json& j, const RegionLabel& l) { j = std::string(to_string(l)); }
inline void from_json(const nlohmann::json& j, RegionLabel& l) { l = region_label_from_string(j.get<std::string>()); }
}  // namespace corlab::regions

namespace corlab::synth {

inline void to_json(nlohmann::json& j, const TaskSpec& s) {
  j = nlohmann::json{{"n_tokens", s.n_tokens},
                     {"dim", s.dim},
                     {"semantic_amp", s.semantic_amp},
                     {"artifact_amp", s.artifact_amp},
                     {"artifact_channels", s.artifact_channels},
                     {"artifact_region", s.artifact_region},
                     {"noise_sigma", s.noise_sigma},
                     {"n_train", s.n_train},
                     {"n_test", s.n_test},
                     {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, TaskSpec& s) {
  using codec::read_opt;
  if (!j.is_object()) throw ConfigError("task must be a JSON object");
  read_opt(j, "n_tokens", s.n_tokens);
  read_opt(j, "dim", s.dim);
  read_opt(j, "semantic_amp", s.semantic_amp);
  read_opt(j, "artifact_amp", s.artifact_amp);
  read_opt(j, "artifact_channels", s.artifact_channels);
  read_opt(j, "artifact_region", s.artifact_region);
  read_opt(j, "noise_sigma", s.noise_sigma);
  read_opt(j, "n_train", s.n_train);
  read_opt(j, "n_test", s.n_test);
  read_opt(j, "seed", s.seed);
}

inline void to_json(nlohmann::json& j, const CounterpartOp& o) {
  j = nlohmann::json{{"perturb_amp", o.perturb_amp},
                     {"target_channels", o.target_channels},
                     {"target_region", o.target_region},
                     {"seed", o.seed}};
}

inline void from_json(const nlohmann::json& j, CounterpartOp& o) {
  using codec::read_opt;
  if (!j.is_object()) throw ConfigError("counterpart must be a JSON object");
  read_opt(j, "perturb_amp", o.perturb_amp);
  read_opt(j, "target_channels", o.target_channels);
  read_opt(j, "target_region", o.target_region);
  read_opt(j, "seed", o.seed);
}

}  // namespace corlab::synth

namespace corlab::model {

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{{"layers", c.layers},
                     {"dim", c.dim},
                     {"heads", c.heads},
                     {"visual_tokens", c.visual_tokens},
                     {"region_count", c.region_count},
                     {"seed", c.seed},
                     {"mlp_hidden", c.mlp_hidden},
                     {"ln_eps", c.ln_eps},
                     {"semantic_bias", c.semantic_bias},
                     {"bias_strength", c.bias_strength},
                     {"bias_channels", c.bias_channels}};
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  using codec::read_opt;
  if (!j.is_object()) throw ConfigError("encoder must be a JSON object");
  read_opt(j, "layers", c.layers);
  read_opt(j, "dim", c.dim);
  read_opt(j, "heads", c.heads);
  read_opt(j, "visual_tokens", c.visual_tokens);
  read_opt(j, "region_count", c.region_count);
  read_opt(j, "seed", c.seed);
  read_opt(j, "mlp_hidden", c.mlp_hidden);
  read_opt(j, "ln_eps", c.ln_eps);
  read_opt(j, "semantic_bias", c.semantic_bias);
  read_opt(j, "bias_strength", c.bias_strength);
  read_opt(j, "bias_channels", c.bias_channels);
}

}  // namespace corlab::model

namespace corlab::optim {

inline void to_json(nlohmann::json& j, const SamConfig& c) {
  j = nlohmann::json{{"rho", c.rho},
                     {"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"steps", c.steps},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, SamConfig& c) {
  using codec::read_opt;
  if (!j.is_object()) throw ConfigError("optimizer must be a JSON object");
  read_opt(j, "rho", c.rho);
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "steps", c.steps);
  read_opt(j, "seed", c.seed);
}

}  // namespace corlab::optim
