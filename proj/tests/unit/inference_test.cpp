// Copyright 2026 The grader-audit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "grader_audit/inference.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "grader_audit/analysis.hpp"
#include "grader_audit/likelihoods.hpp"
#include "grader_audit/simulate.hpp"
#include "test_util.hpp"

namespace grader_audit {
namespace {

PosteriorDraws FromChains(const std::vector<ChainResult>& chains, int dim) {
  std::vector<double> values;
  for (const auto& c : chains) values.insert(values.end(), c.draws.begin(), c.draws.end());
  std::vector<std::string> names;
  for (int d = 0; d < dim; ++d) names.push_back("x[" + std::to_string(d + 1) + "]");
  const int iterations = static_cast<int>(chains[0].draws.size()) / dim;
  return PosteriorDraws(names, dim, static_cast<int>(chains.size()), iterations, values);
}

std::vector<std::vector<double>> Zeros(int chains, int dim) {
  return std::vector<std::vector<double>>(chains, std::vector<double>(dim, 0.5));
}

TEST(Sampler, StandardNormalMoments) {
  SamplerConfig cfg;
  cfg.seed = 12;
  const StandardNormalTarget target(1);
  const auto draws = FromChains(SampleTarget(target, cfg, Zeros(cfg.chains, 1)), 1);
  const auto x = draws.Column(std::size_t{0});
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (x.size() - 1));
  const double ess = EffectiveSampleSize(draws.ChainSeries(0)).value;
  EXPECT_LT(std::abs(mean), 3.0 * sd / std::sqrt(ess));
  EXPECT_NEAR(sd, 1.0, 0.05);
  EXPECT_LT(SplitRhat(draws.ChainSeries(0)), 1.01);
}

TEST(Sampler, SameSeedSameDraws) {
  const Dataset ds = Simulate(DefaultScenario("q1_1", 5)).data;
  SamplerConfig cfg;
  cfg.warmup_iterations = 150;
  cfg.sampling_iterations = 100;
  cfg.seed = 77;
  const PosteriorDraws a = Sample(MakePreset(Preset::kQ1_1), ds, cfg);
  cfg.threads = 1;
  const PosteriorDraws b = Sample(MakePreset(Preset::kQ1_1), ds, cfg);
  for (int s = 0; s < a.total(); ++s) {
    const auto ra = a.Row(s), rb = b.Row(s);
    ASSERT_TRUE(std::equal(ra.begin(), ra.end(), rb.begin()));
  }
  cfg.seed = 78;
  const PosteriorDraws c = Sample(MakePreset(Preset::kQ1_1), ds, cfg);
  EXPECT_NE(a.at(0, 99, 1), c.at(0, 99, 1));
}

TEST(Sampler, DrawsAreConstrained) {
  const Dataset ds = Simulate(DefaultScenario("q3", 5)).data;
  SamplerConfig cfg;
  cfg.warmup_iterations = 150;
  cfg.sampling_iterations = 100;
  const PosteriorDraws d = Sample(MakePreset(Preset::kQ3Hier), ds, cfg);
  const auto sigma = d.BlockColumns("sigma_grader");
  const auto cuts = d.BlockColumns("cutpoints");
  for (int s = 0; s < d.total(); ++s) {
    const auto row = d.Row(s);
    for (auto c : sigma) EXPECT_GT(row[c], 0.0);
    for (std::size_t j = 1; j < cuts.size(); ++j) EXPECT_GE(row[cuts[j]] - row[cuts[j - 1]], 0.3);
  }
}

TEST(SamplerConfig, Validation) {
  SamplerConfig cfg;
  cfg.chains = 0;
  EXPECT_ERROR_KIND(cfg.Validate(), kInvalidConfig);
  cfg = SamplerConfig{};
  cfg.sampling_iterations = 0;
  EXPECT_ERROR_KIND(cfg.Validate(), kInvalidConfig);
  cfg = SamplerConfig{};
  cfg.target_accept = 1.0;
  EXPECT_ERROR_KIND(cfg.Validate(), kInvalidConfig);
}

TEST(Initialize, FiniteDensityOnEveryPreset) {
  for (const Preset p : kAllPresets) {
    const char* scenario = IsPairwisePreset(p) ? "q5"
                           : p == Preset::kQ4   ? "q4"
                           : p == Preset::kQ2   ? "q2"
                                                : "q3";
    const Model model(MakePreset(p), Simulate(DefaultScenario(scenario, 1)).data);
    Rng rng(4);
    const auto u = Initialize(model.spec(), model.layout(), rng, true);
    ASSERT_EQ(static_cast<int>(u.size()), model.layout().dim());
    EXPECT_TRUE(std::isfinite(JointLogDensity(model, u).value)) << ToString(p);
  }
}

TEST(Initialize, NoJitterIsDeterministic) {
  const Model model(MakePreset(Preset::kQ4), Simulate(DefaultScenario("q4", 1)).data);
  Rng a(1), b(2);
  EXPECT_EQ(Initialize(model.spec(), model.layout(), a, false),
            Initialize(model.spec(), model.layout(), b, false));
}

TEST(Rhat, ConstantChainsApart) {
  const std::vector<std::vector<double>> chains{std::vector<double>(100, 0.0),
                                                std::vector<double>(100, 10.0)};
  EXPECT_GT(SplitRhat(chains), 1.2);
}

TEST(Rhat, SingleChainThrows) {
  EXPECT_ERROR_KIND(SplitRhat({std::vector<double>(100, 1.0)}), kTooFewDraws);
}

TEST(Ess, IndependentDraws) {
  Rng rng(31);
  std::vector<std::vector<double>> chains(4, std::vector<double>(1000));
  for (auto& c : chains) {
    for (double& v : c) v = rng.Normal();
  }
  EXPECT_NEAR(EffectiveSampleSize(chains).value, 4000.0, 0.15 * 4000.0);
}

TEST(Ess, ConstantIsFlagged) {
  const std::vector<std::vector<double>> chains(4, std::vector<double>(200, 3.0));
  const auto r = EffectiveSampleSize(chains);
  EXPECT_TRUE(r.degenerate);
  EXPECT_LE(r.value, 1.0);
}

TEST(Ess, CappedForAntitheticSeries) {
  std::vector<std::vector<double>> chains(4, std::vector<double>(500));
  for (auto& c : chains) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = (i % 2 ? 1.0 : -1.0) + 1e-3 * static_cast<double>(i % 7);
  }
  EXPECT_LE(EffectiveSampleSize(chains).value, 1.5 * 2000.0);
}

TEST(Diagnose, FlagsSingleChainRuns) {
  const Dataset ds = Simulate(DefaultScenario("q1_1", 5)).data;
  SamplerConfig cfg;
  cfg.chains = 1;
  cfg.warmup_iterations = 100;
  cfg.sampling_iterations = 100;
  const Diagnostics d = Diagnose(Sample(MakePreset(Preset::kQ1_1), ds, cfg));
  EXPECT_FALSE(d.converged);
  EXPECT_FALSE(d.note.empty());
}

TEST(Diagnose, ShortRunIsNotConverged) {
  // Twenty draws per chain cannot reach ESS 100 on every column.
  const Dataset ds = Simulate(DefaultScenario("q1_2", 5)).data;
  SamplerConfig cfg;
  cfg.warmup_iterations = 30;
  cfg.sampling_iterations = 20;
  EXPECT_FALSE(Diagnose(Sample(MakePreset(Preset::kQ1_2), ds, cfg)).converged);
}

TEST(DrawsCsv, RoundTripWithCommaNames) {
  const Dataset ds = Simulate(DefaultScenario("q2", 5)).data;
  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup_iterations = 50;
  cfg.sampling_iterations = 20;
  const PosteriorDraws a = Sample(MakePreset(Preset::kQ2), ds, cfg);
  const auto path = testing_util::WriteTemp("draws_q2.csv", "");
  WriteDrawsCsv(a, path);
  const PosteriorDraws b = ReadDrawsCsv(path, a.n_free());
  ASSERT_EQ(a.names(), b.names());
  ASSERT_EQ(a.chains(), b.chains());
  ASSERT_EQ(a.iterations(), b.iterations());
  for (int s = 0; s < a.total(); ++s) {
    for (std::size_t k = 0; k < a.n_columns(); ++k) EXPECT_EQ(a.Row(s)[k], b.Row(s)[k]);
  }
}

TEST(DrawsCsv, RejectsCorruptRows) {
  const auto path = testing_util::WriteTemp("bad_draws.csv", "chain,iteration,a\n1,1,0.5\n1,2,oops\n");
  EXPECT_ERROR_KIND(ReadDrawsCsv(path, 1), kMalformedCsv);
}

TEST(PosteriorDraws, DerivedLastLevel) {
  const Dataset ds = Simulate(DefaultScenario("q1_2", 5)).data;
  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup_iterations = 50;
  cfg.sampling_iterations = 20;
  const PosteriorDraws d = Sample(MakePreset(Preset::kQ1_2), ds, cfg);
  const auto a = d.Column("llm[A]");
  const auto b = d.Column("llm[B]");
  for (std::size_t s = 0; s < a.size(); ++s) EXPECT_EQ(a[s], -b[s]);
  EXPECT_EQ(PosteriorDraws::BlockOf("grader_llm[a,b]"), "grader_llm");
  EXPECT_ERROR_KIND(d.Column("nope"), kUnknownParameter);
}

}  // namespace
}  // namespace grader_audit
