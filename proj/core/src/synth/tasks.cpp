// Copyright 2026 The corlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "corlab/synth/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <limits>
#include <numeric>
#include <set>

#include "corlab/common/binary_io.hpp"
#include "corlab/common/format.hpp"
#include "corlab/common/random.hpp"
#include "corlab/errors.hpp"
#include "internal/json_codec.hpp"

namespace corlab::synth {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'D', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

std::size_t integer_sqrt(std::size_t n) {
  auto s = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  return s * s == n ? s : 0;
}

void check_channels(std::span<const std::size_t> ch, std::size_t dim, const char* what) {
  std::set<std::size_t> seen;
  for (auto c : ch) {
    if (c >= dim) throw ConfigError(std::string(what) + " channel " + std::to_string(c) + " out of range");
    if (!seen.insert(c).second) throw ConfigError(std::string(what) + " channel " + std::to_string(c) + " repeated");
  }
}

std::uint64_t split_tag(Split s) { return s == Split::train ? stream::task_train : stream::task_test; }

// One sample from an explicit per-sample seed.
Sample draw(const TaskSpec& spec, const Matrix& sem, const Matrix& art, std::uint64_t seed, std::size_t index) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Sample s;
  s.label = static_cast<std::uint8_t>(index % 2);
  s.tokens = Matrix(ad::Shape{spec.n_tokens, spec.dim});
  for (auto& v : s.tokens.data()) v = spec.noise_sigma * nd(rng);
  if (s.label == 1) {
    for (std::size_t k = 0; k < s.tokens.size(); ++k) {
      s.tokens[k] += spec.semantic_amp * sem[k] + spec.artifact_amp * art[k];
    }
  }
  return s;
}

}  // namespace

void TaskSpec::validate() const {
  if (dim == 0) throw ConfigError("task dim must be positive");
  if (side() < 3) throw ConfigError("task n_tokens must be a square grid with side >= 3");
  if (!(semantic_amp >= 0.0) || !(artifact_amp >= 0.0)) throw ConfigError("task amplitudes must be >= 0");
  if (!(noise_sigma > 0.0)) throw ConfigError("task noise_sigma must be > 0");
  if (n_train == 0 || n_test == 0) throw ConfigError("task split sizes must be positive");
  if (artifact_amp > 0.0 && artifact_channels.empty()) {
    throw ConfigError("artifact_channels must be nonempty when artifact_amp > 0");
  }
  if (artifact_region == RegionLabel::custom) throw ConfigError("artifact_region must be a default region");
  check_channels(artifact_channels, dim, "artifact");
  if (semantic_amp > 0.0 && artifact_channels.size() == dim) {
    throw ConfigError("semantic signal needs at least one non-artifact channel");
  }
}

std::size_t TaskSpec::side() const { return integer_sqrt(n_tokens); }

std::vector<std::size_t> TaskSpec::semantic_channels() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < dim; ++c) {
    if (std::find(artifact_channels.begin(), artifact_channels.end(), c) == artifact_channels.end()) out.push_back(c);
  }
  return out;
}

regions::RegionSpec TaskSpec::region() const { return regions::default_region(side(), artifact_region); }

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split '" + std::string(s) + "'");
}

Matrix structured_pattern(std::uint64_t seed, std::size_t n_tokens, std::size_t dim,
                          std::span<const std::size_t> tokens, std::span<const std::size_t> channels) {
  Matrix p(ad::Shape{n_tokens, dim});
  if (tokens.empty() || channels.empty()) return p;
  Rng rng(seed);
  std::normal_distribution<double> nd;
  double ss = 0.0;
  for (auto t : tokens) {
    for (auto c : channels) {
      if (t >= n_tokens || c >= dim) throw ConfigError("pattern index out of range");
      const double v = nd(rng);
      p(t, c) = v;
      ss += v * v;
    }
  }
  double sign = 1.0;
  for (auto t : tokens) {
    if (p(t, channels.front()) != 0.0) {
      sign = p(t, channels.front()) > 0.0 ? 1.0 : -1.0;
      break;
    }
  }
  const double nrm = std::sqrt(ss);
  for (auto& v : p.data()) v = sign * v / nrm;
  return p;
}

Matrix semantic_pattern(const TaskSpec& spec) {
  const auto ch = spec.semantic_channels();
  Matrix p(ad::Shape{spec.n_tokens, spec.dim});
  if (ch.empty()) return p;
  const std::size_t one_token[] = {0};
  const Matrix u = structured_pattern(derive_seed(derive_seed(spec.seed, stream::patterns), 1), 1, spec.dim,
                                      one_token, ch);
  for (std::size_t t = 0; t < spec.n_tokens; ++t)
    for (auto c : ch) p(t, c) = u(0, c);
  return p;
}

Matrix artifact_pattern(const TaskSpec& spec) {
  const auto reg = spec.region();
  return structured_pattern(derive_seed(spec.seed, stream::patterns), spec.n_tokens, spec.dim, reg.indices,
                            spec.artifact_channels);
}

Sample generate_sample(const TaskSpec& spec, Split split, std::size_t index) {
  spec.validate();
  return draw(spec, semantic_pattern(spec), artifact_pattern(spec),
              derive_seed(derive_seed(spec.seed, split_tag(split)), index), index);
}

Dataset generate(const TaskSpec& spec, Split split) {
  spec.validate();
  const Matrix sem = semantic_pattern(spec);
  const Matrix art = artifact_pattern(spec);
  const std::uint64_t base = derive_seed(spec.seed, split_tag(split));
  Dataset ds;
  ds.spec = spec;
  ds.split = split;
  const std::size_t n = split == Split::train ? spec.n_train : spec.n_test;
  ds.tokens.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = draw(spec, sem, art, derive_seed(base, i), i);
    ds.tokens.push_back(std::move(s.tokens));
    ds.labels.push_back(s.label);
  }
  return ds;
}

CounterpartOp default_counterpart(const TaskSpec& spec, double perturb_amp) {
  return CounterpartOp{perturb_amp, spec.artifact_channels, spec.artifact_region, spec.seed};
}

Matrix counterpart_pattern(const CounterpartOp& op, std::size_t n_tokens, std::size_t dim) {
  const std::size_t side = integer_sqrt(n_tokens);
  if (side < 3) throw ConfigError("counterpart needs a square token grid with side >= 3");
  if (op.target_region == RegionLabel::custom) throw ConfigError("counterpart target_region must be a default region");
  check_channels(op.target_channels, dim, "counterpart");
  const auto reg = regions::default_region(side, op.target_region);
  return structured_pattern(derive_seed(op.seed, stream::patterns), n_tokens, dim, reg.indices, op.target_channels);
}

Sample counterpart(const Sample& s, const CounterpartOp& op) {
  Sample out = s;
  if (op.perturb_amp == 0.0) return out;
  const Matrix p = counterpart_pattern(op, s.tokens.rows(), s.tokens.cols());
  for (std::size_t k = 0; k < out.tokens.size(); ++k) out.tokens[k] += op.perturb_amp * p[k];
  return out;
}

double expected_gsnr(const TaskSpec& spec, std::size_t mc_samples, std::size_t batch_size) {
  spec.validate();
  if (mc_samples < 2 || batch_size == 0) throw ConfigError("expected_gsnr needs >= 2 samples and B >= 1");
  const Matrix sem = semantic_pattern(spec);
  const Matrix art = artifact_pattern(spec);
  const std::uint64_t base = derive_seed(spec.seed, stream::monte_carlo);
  const std::size_t p = spec.n_tokens * spec.dim + 1;
  std::vector<double> mean(p, 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < mc_samples; ++i) {
    const auto s = draw(spec, sem, art, derive_seed(base, i), i);
    // sigmoid(0) - y
    const double r = 0.5 - static_cast<double>(s.label);
    for (std::size_t k = 0; k + 1 < p; ++k) mean[k] += r * s.tokens[k];
    mean[p - 1] += r;
    sq += r * r * (1.0 + std::inner_product(s.tokens.data().begin(), s.tokens.data().end(),
                                             s.tokens.data().begin(), 0.0));
  }
  const double m = static_cast<double>(mc_samples);
  double gn2 = 0.0;
  for (auto& v : mean) {
    v /= m;
    gn2 += v * v;
  }
  const double tr_cov = std::max(sq / m - gn2, 0.0);
  if (tr_cov == 0.0) return gn2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return gn2 * static_cast<double>(batch_size) / tr_cov;
}

std::string task_spec_to_json(const TaskSpec& spec) { return codec::json(spec).dump(2); }

TaskSpec task_spec_from_json(std::string_view text) {
  TaskSpec s;
  codec::parse(text).get_to(s);
  s.validate();
  return s;
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  const codec::json header{{"spec", ds.spec},
                           {"split", std::string(to_string(ds.split))},
                           {"samples", ds.size()},
                           {"n_tokens", ds.spec.n_tokens},
                           {"dim", ds.spec.dim}};
  const std::string h = header.dump();
  out.write(kMagic, 4);
  io::write_u32(out, kFormatVersion);
  io::write_u64(out, h.size());
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& t : ds.tokens) {
    for (double v : t.data()) io::write_f64(out, v);
  }
  out.write(reinterpret_cast<const char*>(ds.labels.data()), static_cast<std::streamsize>(ds.labels.size()));
  if (!out) throw Error("failed to write dataset");
}

Dataset read_dataset(std::istream& in) {
  char magic[4];
  io::read_exact(in, magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw ConfigError("not a corlab dataset");
  if (io::read_u32(in) != kFormatVersion) throw ConfigError("unsupported dataset version");
  const std::uint64_t hlen = io::read_u64(in);
  if (hlen > (1u << 24)) throw ConfigError("dataset header too large");
  std::string h(hlen, '\0');
  io::read_exact(in, h.data(), hlen);
  const auto header = codec::parse(h);
  Dataset ds;
  try {
    header.at("spec").get_to(ds.spec);
    ds.split = split_from_string(header.at("split").get<std::string>());
    const auto n = header.at("samples").get<std::size_t>();
    const auto rows = header.at("n_tokens").get<std::size_t>();
    const auto cols = header.at("dim").get<std::size_t>();
    ds.tokens.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Matrix t(ad::Shape{rows, cols});
      for (auto& v : t.data()) v = io::read_f64(in);
      ds.tokens.push_back(std::move(t));
    }
    ds.labels.resize(n);
    io::read_exact(in, ds.labels.data(), n);
  } catch (const codec::json::exception& e) {
    throw ConfigError(std::string("bad dataset header: ") + e.what());
  }
  return ds;
}

void dump_csv(std::ostream& out, const Dataset& ds) {
  out << "sample,label,token";
  for (std::size_t c = 0; c < ds.spec.dim; ++c) out << ",c" << c;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& t = ds.tokens[i];
    for (std::size_t r = 0; r < t.rows(); ++r) {
      out << i << ',' << static_cast<int>(ds.labels[i]) << ',' << r;
      for (double v : t.row_span(r)) out << ',' << fmt_real(v);
      out << '\n';
    }
  }
}

}  // namespace corlab::synth
