// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/harness/run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "corlab/common/format.hpp"
#include "corlab/errors.hpp"
#include "corlab/harness/metrics.hpp"
#include "corlab/model/tokens.hpp"
#include "corlab/optim/objective.hpp"
#include "corlab/regions/regions.hpp"
#include "internal/json_codec.hpp"

namespace corlab::harness {

using codec::json;
using codec::real;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> feature_of(const RunConfig& cfg, const model::FrozenEncoder& enc,
                               std::span<const regions::RegionSpec> regs, const synth::Sample& s) {
  if (cfg.head == HeadMode::plain) return model::plain_feature(model::encode_plain(enc, s.tokens));
  const auto cp = synth::counterpart(s, cfg.counterpart_op());
  const auto e = model::encode_corit(enc, s.tokens, cp.tokens, regs, cfg.alpha);
  return model::hri_fuse(e.original, cfg.l_mid);
}

void fill(const RunConfig& cfg, const model::FrozenEncoder& enc, const synth::Dataset& ds, Matrix& x,
          std::vector<double>& y) {
  const auto regs = regions::default_partition(cfg.task.side());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto f = feature_of(cfg, enc, regs, ds.sample(i));
    if (i == 0) x = Matrix(ad::Shape{ds.size(), f.size()});
    std::copy(f.begin(), f.end(), x.row_span(i).begin());
    y.push_back(static_cast<double>(ds.labels[i]));
  }
}

json estimate_json(const DiagnosticRecord& d) {
  const auto& s = d.estimate;
  json j{{"step", s.step},
         {"gsnr", real(s.gsnr)},
         {"lambda_max", real(s.lambda_max)},
         {"trace_h", real(s.trace_h)},
         {"kappa_s", real(s.kappa_s)},
         {"trace_cov", real(s.trace_cov)},
         {"grad_norm_sq", real(s.grad_norm_sq)},
         {"trace_xi", real(s.trace_xi)},
         {"cor_bound", real(d.cor_bound)},
         {"exact", s.exact},
         {"lambda_converged", s.lambda_converged},
         {"trace_h_std_error", real(s.trace_h_std_error)}};
  if (d.decomposition) {
    const auto& q = *d.decomposition;
    j["decomposition"] = json{{"geometric", real(q.geometric)}, {"misspec", real(q.misspec)},
                              {"statistical", real(q.statistical)}, {"lhs", real(q.lhs)},
                              {"rhs", real(q.rhs)}, {"rel_gap", real(q.rel_gap)}};
  } else {
    j["decomposition"] = nullptr;
    j["error"] = d.error;
  }
  return j;
}

}  // namespace

FeatureSet extract_features(const RunConfig& cfg, const model::FrozenEncoder& enc) {
  cfg.validate();
  FeatureSet fs;
  fill(cfg, enc, synth::generate(cfg.task, synth::Split::train), fs.train, fs.train_labels);
  fill(cfg, enc, synth::generate(cfg.task, synth::Split::test), fs.test, fs.test_labels);
  return fs;
}

FeatureSet extract_features(const RunConfig& cfg) {
  cfg.validate();
  const model::FrozenEncoder enc(cfg.encoder);
  return extract_features(cfg, enc);
}

bool is_collapsed(const std::vector<StepRow>& steps, const CollapseConfig& c) {
  if (steps.empty()) return true;
  const auto tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(c.tail_fraction * static_cast<double>(steps.size()))));
  for (std::size_t i = steps.size() - std::min(tail, steps.size()); i < steps.size(); ++i) {
    if (!(steps[i].train_auc < c.threshold)) return false;
  }
  return true;
}

RunResult run_on_features(const RunConfig& cfg, const FeatureSet& features) {
  cfg.validate();
  const optim::ProbeObjective train(features.train, features.train_labels);
  const optim::ProbeObjective test(features.test, features.test_labels);
  if (train.degenerate()) throw ConfigError("training split has a single class");
  const auto all = train.all_samples();
  const auto snap = cfg.snapshot_options();
  const std::size_t last = cfg.optimizer.steps - 1;

  RunResult r;
  std::vector<double> cor_per_step;
  auto on_step = [&](const optim::StepRecord& rec, std::span<const double> w) {
    if (rec.failed) return;
    StepRow row;
    row.step = rec.step;
    row.loss = rec.loss;
    row.grad_norm = rec.pop_grad_norm;
    row.train_auc = compute_auc(train.scores(w), features.train_labels);
    row.gsnr = diag::gsnr(train.per_sample_gradients(w, all), cfg.optimizer.batch_size);
    double bound = kNaN;
    if (cfg.diagnostics.every > 0 && (rec.step % cfg.diagnostics.every == 0 || rec.step == last)) {
      DiagnosticRecord d;
      d.estimate = diag::spectral_snapshot(train, w, rec.step, snap);
      d.cor_bound = d.estimate.lambda_max > 0.0 ? std::sqrt(d.estimate.grad_norm_sq) / d.estimate.lambda_max : kNaN;
      bound = d.cor_bound;
      try {
        d.decomposition = diag::verify_decomposition(d.estimate);
      } catch (const Error& e) {
        d.error = e.what();
      }
      r.diagnostics.push_back(std::move(d));
    }
    cor_per_step.push_back(bound);
    r.steps.push_back(row);
  };

  std::vector<double> w0(train.dim(), 0.0);
  auto traj = cfg.optimizer.rho == 0.0 ? optim::run_sgd(train, std::move(w0), cfg.optimizer, on_step)
                                       : optim::run_sam(train, std::move(w0), cfg.optimizer, on_step);
  r.failed = traj.failed;
  r.last_valid_step = traj.last_valid_step;
  if (traj.failed) r.failure = traj.records.back().failure;
  r.final_params = std::move(traj.final_params);
  r.final_train_auc = compute_auc(train.scores(r.final_params), features.train_labels);
  r.final_test_auc = compute_auc(test.scores(r.final_params), features.test_labels);
  r.collapsed = is_collapsed(r.steps, cfg.collapse);

  std::vector<diag::CorPoint> pts;
  for (const auto& d : r.diagnostics) {
    pts.push_back({d.estimate.step, std::sqrt(d.estimate.grad_norm_sq), d.estimate.lambda_max});
  }
  if (!pts.empty()) {
    try {
      r.cor = diag::cor_trajectory(pts);
      if (r.cor->excluded > 0) {
        r.warnings.push_back(std::to_string(r.cor->excluded) + " diagnostic steps with lambda_max <= 0 excluded");
      }
    } catch (const ConfigError& e) {
      r.warnings.push_back(e.what());
    }
  }
  if (r.steps.size() >= 10) {
    std::vector<double> g;
    for (const auto& s : r.steps) g.push_back(s.gsnr);
    r.phases = diag::phase_detect(g, cor_per_step);
  }
  return r;
}

RunResult run_train(const RunConfig& cfg) { return run_on_features(cfg, extract_features(cfg)); }

void write_steps_csv(std::ostream& out, const std::vector<StepRow>& steps) {
  out << "step,loss,train_auc_window,grad_norm,gsnr\n";
  for (const auto& s : steps) {
    out << s.step << ',' << fmt_real(s.loss) << ',' << fmt_real(s.train_auc) << ',' << fmt_real(s.grad_norm) << ','
        << fmt_real(s.gsnr) << '\n';
  }
}

std::string diagnostics_json(const std::vector<DiagnosticRecord>& diags) {
  json arr = json::array();
  for (const auto& d : diags) arr.push_back(estimate_json(d));
  return arr.dump(2);
}

std::string summary_json(const RunConfig& cfg, const RunResult& r) {
  json j{{"schema_version", kSchemaVersion},
         {"config", json::parse(config_to_json(cfg))},
         {"head", std::string(to_string(cfg.head))},
         {"rho", cfg.optimizer.rho},
         {"steps_run", r.steps.size()},
         {"step_budget", cfg.optimizer.steps},
         {"final_train_auc", real(r.final_train_auc)},
         {"final_test_auc", real(r.final_test_auc)},
         {"collapsed", r.collapsed},
         {"failed", r.failed},
         {"last_valid_step", r.last_valid_step},
         {"warnings", r.warnings}};
  if (r.failed) j["failure"] = r.failure;
  if (r.cor) {
    j["cor"] = json{{"rho_critical", real(r.cor->rho_critical)},
                    {"argmin_step", r.cor->argmin_step},
                    {"collapse_zone", r.cor->collapsed},
                    {"excluded", r.cor->excluded}};
  } else {
    j["cor"] = nullptr;
  }
  if (r.phases) {
    const auto& p = *r.phases;
    j["phases"] = json{{"rise", p.rise ? json(*p.rise) : json(nullptr)},
                       {"decay", p.decay ? json(*p.decay) : json(nullptr)},
                       {"t_star", p.t_star},
                       {"gsnr_at_t_star", real(p.gsnr_at_t_star)},
                       {"no_transition", p.collapse}};
  } else {
    j["phases"] = nullptr;
  }
  return j.dump(2);
}

void write_run_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const RunResult& r) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "steps.csv", std::ios::binary);
    write_steps_csv(out, r.steps);
  }
  {
    std::ofstream out(dir / "diagnostics.json", std::ios::binary);
    out << diagnostics_json(r.diagnostics) << '\n';
  }
  std::ofstream out(dir / "summary.json", std::ios::binary);
  out << summary_json(cfg, r) << '\n';
  if (!out) throw Error("failed to write outputs under " + dir.string());
}

}  // namespace corlab::harness
