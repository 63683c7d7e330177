// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "corlab/errors.hpp"
#include "corlab/model/encoder.hpp"
#include "corlab/model/tokens.hpp"
#include "corlab/optim/objective.hpp"
#include "corlab/optim/sam.hpp"
#include "corlab/synth/tasks.hpp"

using corlab::ad::Matrix;
using corlab::ad::Shape;
namespace sy = corlab::synth;
namespace op = corlab::optim;
namespace md = corlab::model;

namespace {

// Brute-force pair counting, ties worth one half.
double pair_auc(const std::vector<double>& s, const std::vector<double>& y) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0.0) continue;
      den += 1.0;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return num / den;
}

Matrix select(const sy::Dataset& ds, const std::vector<std::size_t>& channels) {
  const std::size_t n = ds.spec.n_tokens;
  Matrix x(Shape{ds.size(), n * channels.size()});
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t c = 0; c < channels.size(); ++c) x(i, t * channels.size() + c) = ds.tokens[i](t, channels[c]);
  return x;
}

std::vector<double> labels(const sy::Dataset& ds) { return {ds.labels.begin(), ds.labels.end()}; }

double probe_test_auc(const sy::TaskSpec& spec, const std::vector<std::size_t>& channels, std::size_t steps) {
  const auto tr = sy::generate(spec, sy::Split::train);
  const auto te = sy::generate(spec, sy::Split::test);
  const op::ProbeObjective train(select(tr, channels), labels(tr));
  const op::ProbeObjective test(select(te, channels), labels(te));
  op::SamConfig cfg;
  cfg.steps = steps;
  cfg.seed = spec.seed;
  std::vector<double> w(train.dim(), 0.0);
  const auto traj = op::run_sgd(train, w, cfg);
  return pair_auc(test.scores(traj.final_params), labels(te));
}

sy::TaskSpec base_spec(std::uint64_t seed) {
  sy::TaskSpec s;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(TaskSpec, Validation) {
  auto s = base_spec(0);
  EXPECT_NO_THROW(s.validate());
  s.n_tokens = 15;
  EXPECT_THROW(s.validate(), corlab::ConfigError);
  s = base_spec(0);
  s.artifact_channels.clear();
  EXPECT_THROW(s.validate(), corlab::ConfigError);
  s.artifact_amp = 0.0;
  EXPECT_NO_THROW(s.validate());
  s = base_spec(0);
  s.artifact_channels = {1, 1};
  EXPECT_THROW(s.validate(), corlab::ConfigError);
  s = base_spec(0);
  s.noise_sigma = 0.0;
  EXPECT_THROW(s.validate(), corlab::ConfigError);
}

TEST(TaskSpec, JsonRoundTripIsExact) {
  auto s = base_spec(123456789012345ULL);
  s.semantic_amp = 0.1 + 0.2;
  s.artifact_amp = 1.0 / 3.0;
  s.artifact_region = corlab::regions::RegionLabel::boundary;
  const auto back = sy::task_spec_from_json(sy::task_spec_to_json(s));
  EXPECT_EQ(back, s);
  EXPECT_THROW((void)sy::task_spec_from_json("{\"dim\": \"x\"}"), corlab::ConfigError);
  EXPECT_THROW((void)sy::task_spec_from_json("{"), corlab::ConfigError);
}

TEST(Generate, DeterministicAndBalanced) {
  const auto s = base_spec(5);
  std::ostringstream a;
  std::ostringstream b;
  sy::write_dataset(a, sy::generate(s, sy::Split::train));
  sy::write_dataset(b, sy::generate(s, sy::Split::train));
  EXPECT_EQ(a.str(), b.str());
  for (std::size_t n : {1u, 7u, 10u}) {
    auto t = s;
    t.n_train = n;
    const auto ds = sy::generate(t, sy::Split::train);
    const auto fakes = static_cast<long>(std::count(ds.labels.begin(), ds.labels.end(), 1));
    EXPECT_LE(std::abs(static_cast<long>(n) - 2 * fakes), 1);
  }
  const auto one = sy::generate_sample(s, sy::Split::train, 3);
  EXPECT_EQ(one.tokens, sy::generate(s, sy::Split::train).tokens[3]);
}

TEST(Generate, SplitsDiffer) {
  const auto s = base_spec(5);
  EXPECT_NE(sy::generate(s, sy::Split::train).tokens[0], sy::generate(s, sy::Split::test).tokens[0]);
}

TEST(Generate, FakeMinusRealIsTheSignal) {
  auto s = base_spec(9);
  s.semantic_amp = 0.7;
  s.artifact_amp = 1.3;
  auto quiet = s;
  quiet.semantic_amp = 0.0;
  quiet.artifact_amp = 0.0;
  const auto loud = sy::generate_sample(s, sy::Split::test, 5);
  const auto plain = sy::generate_sample(quiet, sy::Split::test, 5);
  ASSERT_EQ(loud.label, 1);
  const Matrix sem = sy::semantic_pattern(s);
  const Matrix art = sy::artifact_pattern(s);
  for (std::size_t k = 0; k < sem.size(); ++k) {
    EXPECT_NEAR(loud.tokens[k] - plain.tokens[k], 0.7 * sem[k] + 1.3 * art[k], 1e-12);
  }
  const auto real = sy::generate_sample(s, sy::Split::test, 4);
  EXPECT_EQ(real.tokens, sy::generate_sample(quiet, sy::Split::test, 4).tokens);
}

TEST(Patterns, ConfinementAndNorm) {
  auto s = base_spec(2);
  s.artifact_channels = {3, 7};
  s.artifact_region = corlab::regions::RegionLabel::boundary;
  const Matrix a = sy::artifact_pattern(s);
  const auto reg = s.region();
  double ss = 0.0;
  for (std::size_t t = 0; t < s.n_tokens; ++t)
    for (std::size_t c = 0; c < s.dim; ++c) {
      const bool inside = std::find(reg.indices.begin(), reg.indices.end(), t) != reg.indices.end() && (c == 3 || c == 7);
      if (!inside) EXPECT_EQ(a(t, c), 0.0);
      ss += a(t, c) * a(t, c);
    }
  EXPECT_NEAR(ss, 1.0, 1e-12);

  const Matrix sem = sy::semantic_pattern(s);
  double row = 0.0;
  for (std::size_t c = 0; c < s.dim; ++c) {
    if (c == 3 || c == 7) EXPECT_EQ(sem(0, c), 0.0);
    row += sem(0, c) * sem(0, c);
    for (std::size_t t = 1; t < s.n_tokens; ++t) EXPECT_EQ(sem(t, c), sem(0, c));
  }
  EXPECT_NEAR(row, 1.0, 1e-12);
}

TEST(Counterpart, ZeroAmplitudeIsIdentity) {
  const auto s = base_spec(1);
  const auto smp = sy::generate_sample(s, sy::Split::train, 0);
  EXPECT_EQ(sy::counterpart(smp, sy::default_counterpart(s, 0.0)).tokens, smp.tokens);
}

TEST(Counterpart, SingleEntryPatternIsOneHot) {
  const std::size_t tok[] = {5};
  const std::size_t ch[] = {2};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix p = sy::structured_pattern(seed, 9, 4, tok, ch);
    for (std::size_t t = 0; t < 9; ++t)
      for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(p(t, c), (t == 5 && c == 2) ? 1.0 : 0.0);
  }
}

TEST(Counterpart, DefaultOpAddsArtifactPattern) {
  auto s = base_spec(4);
  const auto smp = sy::generate_sample(s, sy::Split::train, 2);
  const auto opd = sy::default_counterpart(s, 0.8);
  const auto c1 = sy::counterpart(smp, opd);
  const auto c2 = sy::counterpart(smp, opd);
  EXPECT_EQ(c1.tokens, c2.tokens);
  EXPECT_EQ(c1.label, smp.label);
  const Matrix a = sy::artifact_pattern(s);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(c1.tokens[k] - smp.tokens[k], 0.8 * a[k], 1e-14);
  auto other = opd;
  other.seed = 99;
  EXPECT_NE(sy::counterpart(smp, other).tokens, c1.tokens);
  other.target_channels = {40};
  EXPECT_THROW((void)sy::counterpart(smp, other), corlab::ConfigError);
}

TEST(ExpectedGsnr, ZeroSignal) {
  auto s = base_spec(3);
  s.artifact_amp = 0.0;
  EXPECT_LT(sy::expected_gsnr(s), 0.01);
}

TEST(ExpectedGsnr, QuadraticInAmplitude) {
  auto s = base_spec(3);
  s.artifact_amp = 2.0;
  auto d = s;
  d.artifact_amp = 4.0;
  const double ratio = sy::expected_gsnr(d) / sy::expected_gsnr(s);
  EXPECT_NEAR(ratio, 4.0, 1.2);
}

TEST(ExpectedGsnr, IncreasingFamily) {
  auto s = base_spec(8);
  double prev = 0.0;
  for (double a : {0.25, 0.5, 1.0, 2.0}) {
    s.artifact_amp = a;
    const double g = sy::expected_gsnr(s, 4000);
    EXPECT_GT(g, prev) << a;
    prev = g;
  }
}

TEST(ExpectedGsnr, MonotoneOnAmplitudeGrid) {
  const double amps[] = {0.0, 0.5, 1.0, 2.0};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double grid[4][4];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        auto s = base_spec(seed);
        s.semantic_amp = amps[i];
        s.artifact_amp = amps[j];
        grid[i][j] = sy::expected_gsnr(s, 2000);
      }
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (i > 0) EXPECT_GE(grid[i][j], grid[i - 1][j]);
        if (j > 0) EXPECT_GE(grid[i][j], grid[i][j - 1]);
      }
  }
}

TEST(Probe, ZeroSignalIsChance) {
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = base_spec(seed);
    s.artifact_amp = 0.0;
    s.n_test = 400;
    sum += probe_test_auc(s, {seed % s.dim}, 200);
  }
  const double mean = sum / 20.0;
  EXPECT_GE(mean, 0.45);
  EXPECT_LE(mean, 0.55);
}

TEST(Probe, SemanticSignalIsLearned) {
  auto s = base_spec(11);
  s.semantic_amp = 2.0;
  s.artifact_amp = 0.0;
  EXPECT_GT(probe_test_auc(s, s.semantic_channels(), 200), 0.95);
}

TEST(Dataset, BinaryRoundTripAndCsv) {
  auto s = base_spec(6);
  s.n_train = 3;
  const auto ds = sy::generate(s, sy::Split::train);
  std::stringstream buf;
  sy::write_dataset(buf, ds);
  const auto back = sy::read_dataset(buf);
  EXPECT_EQ(back, ds);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 2);
  std::istringstream cut(bytes);
  EXPECT_THROW((void)sy::read_dataset(cut), corlab::Error);

  std::ostringstream csv;
  sy::dump_csv(csv, ds);
  const auto text = csv.str();
  EXPECT_EQ(text.substr(0, 22), "sample,label,token,c0,");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(1 + 3 * s.n_tokens));
}

TEST(SemanticBias, DeepLayersAttenuateArtifactCgp) {
  auto s = base_spec(21);
  s.semantic_amp = 0.0;
  s.artifact_amp = 1.0;
  md::EncoderConfig cfg;
  cfg.seed = 3;
  cfg.semantic_bias = true;
  cfg.bias_channels = s.artifact_channels;
  const md::FrozenEncoder enc(cfg);
  const auto regs = corlab::regions::default_partition(s.side());
  const auto opd = sy::default_counterpart(s);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto smp = sy::generate_sample(s, sy::Split::train, i);
    const auto cp = sy::counterpart(smp, opd);
    const auto e = md::encode_corit(enc, smp.tokens, cp.tokens, regs, 0.0);
    auto energy = [&](std::size_t layer_index) {
      const auto& g = e.layers.at(layer_index).cgp;
      double acc = 0.0;
      for (std::size_t t = 0; t < g.rows(); ++t)
        for (auto c : s.artifact_channels) acc += g(t, c) * g(t, c);
      return acc;
    };
    EXPECT_LT(energy(e.layers.size() - 1), energy(0)) << "sample " << i;
  }
}
