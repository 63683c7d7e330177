// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/harness/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "corlab/common/random.hpp"
#include "corlab/errors.hpp"
#include "internal/json_codec.hpp"

namespace corlab::harness {

using codec::json;
using codec::real;

std::string_view to_string(SweepBracket b) {
  switch (b) {
    case SweepBracket::bracketed:
      return "bracketed";
    case SweepBracket::all_collapsed:
      return "all_collapsed";
    case SweepBracket::none_collapsed:
      return "none_collapsed";
  }
  return "bracketed";
}

SweepPoint probe_rho(const RunConfig& cfg, const FeatureSet& features, double rho, std::size_t seeds) {
  if (seeds == 0) throw ConfigError("probe_rho needs at least one seed");
  SweepPoint p;
  p.rho = rho;
  for (std::size_t k = 0; k < seeds; ++k) {
    RunConfig c = cfg;
    c.optimizer.rho = rho;
    c.optimizer.seed = cfg.optimizer.seed + k;
    c.diagnostics.every = 0;
    const auto r = run_on_features(c, features);
    p.train_auc += r.final_train_auc;
    p.test_auc += r.final_test_auc;
    // a numerically failed run counts as collapsed
    if (r.collapsed || r.failed) ++p.collapsed_votes;
    ++p.runs;
  }
  p.train_auc /= static_cast<double>(seeds);
  p.test_auc /= static_cast<double>(seeds);
  p.collapsed = 2 * p.collapsed_votes > seeds;
  return p;
}

BoundarySearch find_collapse_boundary(std::span<const double> rho_list,
                                      const std::function<bool(double)>& collapsed, double resolution,
                                      bool bisect) {
  if (rho_list.size() < 3) throw ConfigError("rho sweep needs at least 3 values");
  if (!std::is_sorted(rho_list.begin(), rho_list.end()) ||
      std::adjacent_find(rho_list.begin(), rho_list.end()) != rho_list.end()) {
    throw ConfigError("rho list must be strictly ascending");
  }
  if (rho_list.front() < 0.0) throw ConfigError("rho must be >= 0");
  if (!(resolution > 0.0)) throw ConfigError("sweep resolution must be positive");
  BoundarySearch out;
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < rho_list.size(); ++i) {
    const bool c = collapsed(rho_list[i]);
    out.probes.emplace_back(rho_list[i], c);
    if (c) {
      if (!first) first = i;
    } else if (first) {
      out.violations.push_back(rho_list[i]);
    }
  }
  if (!first) {
    out.bracket = SweepBracket::none_collapsed;
    out.boundary = rho_list.back();
    return out;
  }
  if (*first == 0) {
    out.bracket = SweepBracket::all_collapsed;
    out.boundary = rho_list.front();
    return out;
  }
  double lo = rho_list[*first - 1];
  double hi = rho_list[*first];
  while (bisect && hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    const bool c = collapsed(mid);
    out.probes.emplace_back(mid, c);
    (c ? hi : lo) = mid;
  }
  out.boundary = 0.5 * (lo + hi);
  return out;
}

SweepResult sweep_rho(const RunConfig& cfg, const FeatureSet& features, std::span<const double> rho_list,
                      const SweepOptions& opt) {
  SweepResult res;
  const std::size_t listed = rho_list.size();
  auto search = find_collapse_boundary(
      rho_list,
      [&](double rho) {
        auto p = probe_rho(cfg, features, rho, opt.seeds);
        p.from_bisection = res.points.size() >= listed;
        res.points.push_back(p);
        return p.collapsed;
      },
      opt.resolution, opt.bisect);
  res.empirical_cor = search.boundary;
  res.bracket = search.bracket;
  res.monotonicity_violations = std::move(search.violations);
  RunConfig c = cfg;
  c.optimizer.rho = rho_list.front();
  res.theoretical = run_on_features(c, features).cor;
  return res;
}

SweepResult sweep_rho(const RunConfig& cfg, std::span<const double> rho_list, const SweepOptions& opt) {
  return sweep_rho(cfg, extract_features(cfg), rho_list, opt);
}

TheoremInstance verify_theorem_instance(const optim::SoftmaxObjective& obj, std::span<const double> w,
                                        const TheoremOptions& opt) {
  TheoremInstance inst;
  inst.samples = obj.sample_count();
  inst.features = obj.features().cols();
  inst.classes = obj.classes();
  diag::SnapshotOptions so;
  so.batch_size = 1;
  so.dense_threshold = std::max(opt.max_params, obj.dim());
  so.power_iters = 20000;
  so.power_tol = 1e-14;
  so.check_well_posed = false;
  inst.estimate = diag::spectral_snapshot(obj, w, 0, so);
  const auto& s = inst.estimate;
  if (!(s.trace_h > 0.0)) {
    inst.message = "Tr(H) is not positive";
    return inst;
  }
  inst.radicand = 1.0 + s.trace_xi / s.trace_h;
  inst.well_posed = inst.radicand >= -opt.well_posed_tol;
  try {
    inst.decomposition = diag::verify_decomposition(s, 1e-300, opt.well_posed_tol);
  } catch (const Error& e) {
    inst.message = e.what();
    return inst;
  }
  const bool gap_ok = inst.decomposition->rel_gap < opt.tolerance;
  const bool dense = s.trace_h_std_error == 0.0 && obj.dim() <= so.dense_threshold;
  inst.passed = gap_ok && inst.well_posed && dense;
  if (!gap_ok) inst.message = "relative gap above tolerance";
  if (!inst.well_posed) inst.message = "misspecification radicand below -tol";
  if (!s.lambda_converged) inst.message += inst.message.empty() ? "power iteration hit its budget" : "; power iteration hit its budget";
  return inst;
}

TheoremReport verify_theorem_campaign(std::size_t n_instances, std::uint64_t seed, const TheoremOptions& opt) {
  if (n_instances == 0) throw ConfigError("verify-theorem needs at least one instance");
  TheoremReport rep;
  rep.tolerance = opt.tolerance;
  for (std::size_t k = 0; k < n_instances; ++k) {
    const std::uint64_t s = derive_seed(derive_seed(seed, stream::instances), k);
    Rng rng(s);
    std::normal_distribution<double> nd;
    std::size_t f = 0;
    std::size_t c = 0;
    do {
      f = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
      c = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
    } while ((f + 1) * c > opt.max_params);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 12)(rng);
    ad::Matrix x(ad::Shape{n, f});
    for (auto& v : x.data()) v = nd(rng);
    std::vector<std::size_t> y(n);
    for (auto& v : y) v = std::uniform_int_distribution<std::size_t>(0, c - 1)(rng);
    const optim::SoftmaxObjective obj(std::move(x), std::move(y), c);
    std::vector<double> w(obj.dim());
    for (auto& v : w) v = nd(rng);
    auto inst = verify_theorem_instance(obj, w, opt);
    inst.index = k;
    inst.seed = s;
    if (inst.passed) ++rep.passed;
    if (inst.decomposition) rep.max_rel_gap = std::max(rep.max_rel_gap, inst.decomposition->rel_gap);
    rep.instances.push_back(std::move(inst));
  }
  return rep;
}

namespace {

HeadSummary summarise(const RunConfig& cfg, const RunResult& r) {
  HeadSummary h;
  h.head = cfg.head;
  h.theoretical_cor = r.cor ? r.cor->rho_critical : std::numeric_limits<double>::quiet_NaN();
  h.argmin_step = r.cor ? r.cor->argmin_step : 0;
  h.final_train_auc = r.final_train_auc;
  h.final_test_auc = r.final_test_auc;
  h.collapsed = r.collapsed;
  return h;
}

json head_json(const HeadSummary& h) {
  json j{{"head", std::string(to_string(h.head))},
         {"theoretical_cor", real(h.theoretical_cor)},
         {"argmin_step", h.argmin_step},
         {"collapse_zone", h.theoretical_cor < diag::kCollapseZone},
         {"final_train_auc", real(h.final_train_auc)},
         {"final_test_auc", real(h.final_test_auc)},
         {"collapsed", h.collapsed}};
  j["empirical_cor"] = h.empirical_cor ? real(*h.empirical_cor) : json(nullptr);
  j["bracket"] = h.bracket ? json(std::string(to_string(*h.bracket))) : json(nullptr);
  return j;
}

json estimate_json(const diag::SpectralEstimate& s) {
  return json{{"lambda_max", real(s.lambda_max)},     {"trace_h", real(s.trace_h)},
              {"kappa_s", real(s.kappa_s)},           {"trace_cov", real(s.trace_cov)},
              {"grad_norm_sq", real(s.grad_norm_sq)}, {"trace_xi", real(s.trace_xi)},
              {"gsnr", real(s.gsnr)},                 {"lambda_converged", s.lambda_converged}};
}

}  // namespace

CompareReport corit_vs_baseline(const RunConfig& cfg, std::span<const double> rho_list, const SweepOptions& opt) {
  CompareReport rep;
  const model::FrozenEncoder enc(cfg.encoder);
  for (HeadMode mode : {HeadMode::plain, HeadMode::corit}) {
    RunConfig c = cfg;
    c.head = mode;
    const auto feats = extract_features(c, enc);
    auto h = summarise(c, run_on_features(c, feats));
    if (!rho_list.empty()) {
      const auto sw = sweep_rho(c, feats, rho_list, opt);
      h.empirical_cor = sw.empirical_cor;
      h.bracket = sw.bracket;
    }
    (mode == HeadMode::plain ? rep.plain : rep.corit) = h;
  }
  return rep;
}

std::string sweep_json(const RunConfig& cfg, const SweepResult& r) {
  json pts = json::array();
  for (const auto& p : r.points) {
    pts.push_back(json{{"rho", p.rho},
                       {"train_auc", real(p.train_auc)},
                       {"test_auc", real(p.test_auc)},
                       {"collapsed", p.collapsed},
                       {"collapsed_votes", p.collapsed_votes},
                       {"runs", p.runs},
                       {"bisection", p.from_bisection}});
  }
  json j{{"schema_version", kSchemaVersion},
         {"config", json::parse(config_to_json(cfg))},
         {"points", pts},
         {"empirical_cor", real(r.empirical_cor)},
         {"bracket", std::string(to_string(r.bracket))},
         {"monotonicity_violations", r.monotonicity_violations}};
  j["theoretical_cor"] = r.theoretical ? real(r.theoretical->rho_critical) : json(nullptr);
  return j.dump(2);
}

std::string theorem_json(const TheoremReport& r) {
  json arr = json::array();
  for (const auto& i : r.instances) {
    json j{{"index", i.index},
           {"seed", i.seed},
           {"samples", i.samples},
           {"features", i.features},
           {"classes", i.classes},
           {"radicand", real(i.radicand)},
           {"well_posed", i.well_posed},
           {"passed", i.passed}};
    j["rel_gap"] = i.decomposition ? real(i.decomposition->rel_gap) : json(nullptr);
    if (!i.passed) j["estimate"] = estimate_json(i.estimate);
    if (!i.message.empty()) j["message"] = i.message;
    arr.push_back(std::move(j));
  }
  json j{{"schema_version", kSchemaVersion},
         {"instances", r.instances.size()},
         {"passed", r.passed},
         {"all_passed", r.all_passed()},
         {"tolerance", r.tolerance},
         {"max_rel_gap", real(r.max_rel_gap)},
         {"results", arr}};
  return j.dump(2);
}

std::string compare_json(const RunConfig& cfg, const CompareReport& r) {
  json j{{"schema_version", kSchemaVersion},
         {"config", json::parse(config_to_json(cfg))},
         {"plain", head_json(r.plain)},
         {"corit", head_json(r.corit)},
         {"corit_higher", r.corit_higher()}};
  return j.dump(2);
}

}  // namespace corlab::harness
