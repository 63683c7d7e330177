// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "corlab/errors.hpp"
#include "internal/json_codec.hpp"

namespace corlab::harness {

using codec::json;
using codec::read_opt;

std::string_view to_string(HeadMode m) { return m == HeadMode::plain ? "plain" : "corit"; }

HeadMode head_mode_from_string(std::string_view s) {
  if (s == "plain") return HeadMode::plain;
  if (s == "corit") return HeadMode::corit;
  throw ConfigError("unknown head mode '" + std::string(s) + "'");
}

void RunConfig::validate() const {
  task.validate();
  encoder.validate();
  optimizer.validate();
  if (encoder.visual_tokens != task.n_tokens) throw ConfigError("encoder.visual_tokens must equal task.n_tokens");
  if (encoder.dim != task.dim) throw ConfigError("encoder.dim must equal task.dim");
  if (optimizer.batch_size > task.n_train) throw ConfigError("batch_size exceeds n_train");
  if (head == HeadMode::corit) {
    if (encoder.region_count != 3) throw ConfigError("corit head uses the 3-region default partition");
    if (l_mid < 1 || l_mid >= encoder.layers) throw ConfigError("l_mid must satisfy 1 <= l_mid < layers");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (!(perturb_amp >= 0.0)) throw ConfigError("perturb_amp must be >= 0");
    if (task.artifact_channels.empty()) throw ConfigError("corit counterpart needs artifact channels");
  }
  if (diagnostics.every > 0 && (diagnostics.power_iters == 0 || !(diagnostics.power_tol > 0.0))) {
    throw ConfigError("diagnostics need power_iters > 0 and power_tol > 0");
  }
  if (diagnostics.trace_probes == 0) throw ConfigError("diagnostics.trace_probes must be positive");
  if (!(collapse.tail_fraction > 0.0 && collapse.tail_fraction <= 1.0)) {
    throw ConfigError("collapse.tail_fraction must lie in (0, 1]");
  }
}

synth::CounterpartOp RunConfig::counterpart_op() const { return synth::default_counterpart(task, perturb_amp); }

diag::SnapshotOptions RunConfig::snapshot_options() const {
  diag::SnapshotOptions o;
  o.batch_size = optimizer.batch_size;
  o.dense_threshold = diagnostics.dense_threshold;
  o.trace_probes = diagnostics.trace_probes;
  o.power_iters = diagnostics.power_iters;
  o.power_tol = diagnostics.power_tol;
  o.seed = derive_seed(optimizer.seed, stream::probes);
  o.check_well_posed = false;
  return o;
}

std::string config_to_json(const RunConfig& c) {
  const json j{{"schema_version", kSchemaVersion},
               {"task", c.task},
               {"encoder", c.encoder},
               {"head", std::string(to_string(c.head))},
               {"optimizer", c.optimizer},
               {"diagnostics",
                {{"every", c.diagnostics.every},
                 {"trace_probes", c.diagnostics.trace_probes},
                 {"power_iters", c.diagnostics.power_iters},
                 {"power_tol", c.diagnostics.power_tol},
                 {"dense_threshold", c.diagnostics.dense_threshold}}},
               {"collapse", {{"threshold", c.collapse.threshold}, {"tail_fraction", c.collapse.tail_fraction}}},
               {"alpha", c.alpha},
               {"l_mid", c.l_mid},
               {"perturb_amp", c.perturb_amp},
               {"output_dir", c.output_dir}};
  return j.dump(2);
}

RunConfig config_from_json(std::string_view text) {
  const json j = codec::parse(text);
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"schema_version", "task", "encoder", "head", "optimizer", "diagnostics",
                                           "collapse", "alpha", "l_mid", "perturb_amp", "output_dir"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  int version = kSchemaVersion;
  read_opt(j, "schema_version", version);
  if (version != kSchemaVersion) throw ConfigError("unsupported schema_version " + std::to_string(version));
  RunConfig c;
  if (auto it = j.find("task"); it != j.end()) from_json(*it, c.task);
  if (auto it = j.find("encoder"); it != j.end()) from_json(*it, c.encoder);
  if (auto it = j.find("optimizer"); it != j.end()) from_json(*it, c.optimizer);
  std::string head = std::string(to_string(c.head));
  read_opt(j, "head", head);
  c.head = head_mode_from_string(head);
  if (auto it = j.find("diagnostics"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("diagnostics must be a JSON object");
    read_opt(*it, "every", c.diagnostics.every);
    read_opt(*it, "trace_probes", c.diagnostics.trace_probes);
    read_opt(*it, "power_iters", c.diagnostics.power_iters);
    read_opt(*it, "power_tol", c.diagnostics.power_tol);
    read_opt(*it, "dense_threshold", c.diagnostics.dense_threshold);
  }
  if (auto it = j.find("collapse"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("collapse must be a JSON object");
    read_opt(*it, "threshold", c.collapse.threshold);
    read_opt(*it, "tail_fraction", c.collapse.tail_fraction);
  }
  read_opt(j, "alpha", c.alpha);
  read_opt(j, "l_mid", c.l_mid);
  read_opt(j, "perturb_amp", c.perturb_amp);
  read_opt(j, "output_dir", c.output_dir);
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace corlab::harness
