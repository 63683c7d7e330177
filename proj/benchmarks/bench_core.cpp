// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "corlab/autodiff/engine.hpp"
#include "corlab/diagnostics/spectral.hpp"
#include "corlab/harness/experiments.hpp"
#include "corlab/harness/metrics.hpp"
#include "corlab/model/encoder.hpp"
#include "corlab/model/tokens.hpp"
#include "corlab/model/toy_loss.hpp"
#include "corlab/optim/objective.hpp"
#include "corlab/optim/sam.hpp"
#include "corlab/synth/tasks.hpp"

namespace dg = corlab::diag;
namespace hn = corlab::harness;
namespace md = corlab::model;
namespace op = corlab::optim;
using corlab::ad::Matrix;
using corlab::ad::Shape;

namespace {

op::ProbeObjective random_probe(std::size_t n, std::size_t f) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Matrix x(Shape{n, f});
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<double>(i % 2);
    for (std::size_t c = 0; c < f; ++c) x(i, c) = nd(rng) + (c == 0 ? y[i] : 0.0);
  }
  return op::ProbeObjective(std::move(x), std::move(y));
}

void BM_SamStep(benchmark::State& state) {
  const auto obj = random_probe(200, static_cast<std::size_t>(state.range(0)));
  std::vector<double> w(obj.dim(), 0.0);
  op::BatchSampler s(200, 20, 3);
  for (auto _ : state) {
    auto rec = op::sam_step(obj, w, s.next(), 0.05, 1e-3);
    benchmark::DoNotOptimize(rec);
  }
}
BENCHMARK(BM_SamStep)->Arg(32)->Arg(256);

void BM_SpectralSnapshot(benchmark::State& state) {
  const auto obj = random_probe(200, static_cast<std::size_t>(state.range(0)));
  const std::vector<double> w(obj.dim(), 0.01);
  dg::SnapshotOptions opt;
  for (auto _ : state) {
    auto snap = dg::spectral_snapshot(obj, w, 0, opt);
    benchmark::DoNotOptimize(snap);
  }
}
BENCHMARK(BM_SpectralSnapshot)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_EncoderForward(benchmark::State& state) {
  md::EncoderConfig cfg;
  const md::FrozenEncoder enc(cfg);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  Matrix v(Shape{cfg.visual_tokens, cfg.dim});
  for (auto& x : v.data()) x = nd(rng);
  for (auto _ : state) {
    auto states = md::encode_plain(enc, v);
    benchmark::DoNotOptimize(states);
  }
}
BENCHMARK(BM_EncoderForward)->Unit(benchmark::kMicrosecond);

void BM_ToyModelGradient(benchmark::State& state) {
  md::EncoderConfig cfg;
  cfg.layers = 2;
  const md::FrozenEncoder enc(cfg);
  const md::ProbeHead head{std::vector<double>(cfg.dim, 0.1), 0.0};
  const auto params = md::toy_model_params(enc, head);
  const auto loss = md::toy_model_loss(enc, {1.0, 0.0});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Matrix x(Shape{2 * cfg.visual_tokens, cfg.dim});
  for (auto& v : x.data()) v = nd(rng);
  for (auto _ : state) {
    auto r = corlab::ad::value_and_gradient(loss, params, x);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_ToyModelGradient)->Unit(benchmark::kMillisecond);

void BM_TaskGenerate(benchmark::State& state) {
  corlab::synth::TaskSpec spec;
  spec.artifact_amp = 2.0;
  for (auto _ : state) {
    auto d = corlab::synth::generate(spec, corlab::synth::Split::train);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_TaskGenerate)->Unit(benchmark::kMillisecond);

void BM_ComputeAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  std::vector<double> s(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<double>(i % 2);
    s[i] = nd(rng) + y[i];
  }
  for (auto _ : state) benchmark::DoNotOptimize(hn::compute_auc(s, y));
}
BENCHMARK(BM_ComputeAuc)->Arg(200)->Arg(10000);

void BM_TheoremInstance(benchmark::State& state) {
  for (auto _ : state) {
    auto r = hn::verify_theorem_campaign(1, 7);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_TheoremInstance)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
