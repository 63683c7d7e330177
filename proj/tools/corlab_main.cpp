// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

// corlab command-line driver.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "corlab/diagnostics/landscape.hpp"
#include "corlab/errors.hpp"
#include "corlab/harness/config.hpp"
#include "corlab/harness/experiments.hpp"
#include "corlab/harness/run.hpp"
#include "corlab/optim/objective.hpp"

namespace fs = std::filesystem;
namespace hn = corlab::harness;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;
constexpr int kTheoremFailure = 4;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> rho;
  bool quiet{false};
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON run configuration");
  app->add_option("--out", c.out, "output directory (overrides output_dir)");
  app->add_option("--seed", c.seed, "seed for task, encoder and optimizer");
  app->add_option("--rho", c.rho, "SAM radius override");
  app->add_flag("--quiet", c.quiet, "suppress progress output");
}

hn::RunConfig resolve(const Common& c) {
  hn::RunConfig cfg = c.config.empty() ? hn::RunConfig{} : hn::load_config(c.config);
  if (c.seed) {
    cfg.task.seed = *c.seed;
    cfg.encoder.seed = *c.seed;
    cfg.optimizer.seed = *c.seed;
  }
  if (c.rho) cfg.optimizer.rho = *c.rho;
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text << '\n';
  if (!out) throw corlab::Error("failed to write " + path.string());
}

int finish_run(const hn::RunConfig& cfg, const hn::RunResult& r, bool quiet) {
  hn::write_run_outputs(cfg.output_dir, cfg, r);
  if (!quiet) {
    std::cout << "train_auc " << r.final_train_auc << " test_auc " << r.final_test_auc
              << (r.collapsed ? " collapsed" : "") << '\n';
    if (r.cor) std::cout << "rho_critical " << r.cor->rho_critical << " at step " << r.cor->argmin_step << '\n';
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  }
  if (r.failed) {
    std::cerr << "run failed after step " << r.last_valid_step << ": " << r.failure << '\n';
    return kNumericalFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corlab: SAM stability diagnostics on synthetic token tasks"};
  app.require_subcommand(1);

  Common train_opts;
  auto* train = app.add_subcommand("train", "train a probe head and write steps.csv, diagnostics.json, summary.json");
  add_common(train, train_opts);

  Common sweep_opts;
  std::vector<double> rhos{0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
  std::size_t sweep_seeds = 3;
  bool no_bisect = false;
  auto* sweep = app.add_subcommand("sweep-rho", "collapse sweep over rho with bisection of the boundary");
  add_common(sweep, sweep_opts);
  sweep->add_option("--rhos", rhos, "ascending rho values")->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "runs per rho (majority vote)");
  sweep->add_flag("--no-bisect", no_bisect, "skip boundary bisection");

  Common diag_opts;
  std::size_t every = 1;
  auto* diagnose = app.add_subcommand("diagnose", "train with a spectral snapshot at every step");
  add_common(diagnose, diag_opts);
  diagnose->add_option("--every", every, "snapshot cadence in steps");

  Common land_opts;
  double half_width = 1.0;
  std::size_t resolution = 21;
  auto* landscape = app.add_subcommand("landscape", "2-D loss surface around the trained probe");
  add_common(landscape, land_opts);
  landscape->add_option("--half-width", half_width, "grid half width");
  landscape->add_option("--resolution", resolution, "odd grid resolution >= 3");

  Common thm_opts;
  std::size_t instances = 100;
  auto* theorem = app.add_subcommand("verify-theorem", "exact decomposition check on random softmax regressions");
  add_common(theorem, thm_opts);
  theorem->add_option("--instances", instances, "number of instances");

  Common cmp_opts;
  std::vector<double> cmp_rhos;
  auto* compare = app.add_subcommand("compare", "plain probe against the CoRIT head on one config");
  add_common(compare, cmp_opts);
  compare->add_option("--rhos", cmp_rhos, "optional rho list for empirical COR")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train) {
      const auto cfg = resolve(train_opts);
      return finish_run(cfg, hn::run_train(cfg), train_opts.quiet);
    }
    if (*diagnose) {
      auto cfg = resolve(diag_opts);
      if (every == 0) throw corlab::ConfigError("--every must be positive");
      cfg.diagnostics.every = every;
      return finish_run(cfg, hn::run_train(cfg), diag_opts.quiet);
    }
    if (*sweep) {
      const auto cfg = resolve(sweep_opts);
      hn::SweepOptions so;
      so.seeds = sweep_seeds;
      so.bisect = !no_bisect;
      const auto r = hn::sweep_rho(cfg, rhos, so);
      write_text(fs::path(cfg.output_dir) / "sweep.json", hn::sweep_json(cfg, r));
      if (!sweep_opts.quiet) {
        std::cout << "empirical_cor " << r.empirical_cor << " (" << hn::to_string(r.bracket) << ")\n";
        for (double v : r.monotonicity_violations) std::cerr << "warning: non-monotone collapse at rho " << v << '\n';
      }
      return kOk;
    }
    if (*landscape) {
      const auto cfg = resolve(land_opts);
      const auto feats = hn::extract_features(cfg);
      const auto r = hn::run_on_features(cfg, feats);
      const corlab::optim::ProbeObjective obj(feats.train, feats.train_labels);
      const std::vector<std::size_t> blocks{feats.train.cols(), 1};
      const auto grid = corlab::diag::landscape_sample(obj, r.final_params, blocks, half_width, resolution,
                                                       cfg.optimizer.seed);
      fs::create_directories(cfg.output_dir);
      std::ofstream out(fs::path(cfg.output_dir) / "landscape.csv", std::ios::binary);
      corlab::diag::write_landscape_csv(out, grid);
      if (!land_opts.quiet && grid.non_finite > 0) {
        std::cerr << "warning: " << grid.non_finite << " non-finite cells\n";
      }
      return r.failed ? kNumericalFailure : kOk;
    }
    if (*theorem) {
      const auto cfg = resolve(thm_opts);
      const std::uint64_t seed = thm_opts.seed.value_or(cfg.optimizer.seed);
      const auto r = hn::verify_theorem_campaign(instances, seed);
      write_text(fs::path(cfg.output_dir) / "theorem.json", hn::theorem_json(r));
      if (!thm_opts.quiet) {
        std::cout << r.passed << "/" << r.instances.size() << " instances passed, max rel gap " << r.max_rel_gap
                  << '\n';
      }
      return r.all_passed() ? kOk : kTheoremFailure;
    }
    if (*compare) {
      const auto cfg = resolve(cmp_opts);
      const auto r = hn::corit_vs_baseline(cfg, cmp_rhos);
      write_text(fs::path(cfg.output_dir) / "compare.json", hn::compare_json(cfg, r));
      if (!cmp_opts.quiet) {
        std::cout << "cor plain " << r.plain.theoretical_cor << " corit " << r.corit.theoretical_cor << '\n';
      }
      return kOk;
    }
  } catch (const corlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const corlab::ShapeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const corlab::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kOk;
}
