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

#include <benchmark/benchmark.h>

#include <vector>

#include "grader_audit/analysis.hpp"
#include "grader_audit/compare.hpp"
#include "grader_audit/design.hpp"
#include "grader_audit/likelihoods.hpp"
#include "grader_audit/random.hpp"
#include "grader_audit/simulate.hpp"

namespace ga = grader_audit;

namespace {

// Log density plus gradient; this is the sampler's inner loop.
void BM_DensityGradient(benchmark::State& state) {
  const auto preset = ga::kAllPresets[static_cast<std::size_t>(state.range(0))];
  const char* scenario = preset == ga::Preset::kQ4 ? "q4" : preset == ga::Preset::kQ5 ? "q5" : "q1_2";
  const ga::Dataset ds = ga::Simulate(ga::DefaultScenario(scenario, 1)).data;
  const ga::Model model(ga::MakePreset(preset), ds);
  const ga::JointDensity density(model);
  ga::Rng rng(1);
  const auto theta = ga::Initialize(model.spec(), model.layout(), rng, false);
  std::vector<double> grad(theta.size());
  for (auto _ : state) benchmark::DoNotOptimize(density.Evaluate(theta, grad));
  state.SetLabel(std::string(ga::ToString(preset)));
}
BENCHMARK(BM_DensityGradient)->Arg(2)->Arg(6)->Arg(7);

ga::PointwiseLogLik RandomLoglik(int draws, int obs) {
  ga::Rng rng(2);
  ga::PointwiseLogLik m;
  m.draws = draws;
  m.obs = obs;
  m.values.resize(static_cast<std::size_t>(draws) * obs);
  for (double& v : m.values) v = -1.0 + 0.3 * rng.Normal(0.0, 1.0);
  return m;
}

void BM_PsisLoo(benchmark::State& state) {
  const auto m = RandomLoglik(4000, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ga::PsisLoo(m));
}
BENCHMARK(BM_PsisLoo)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_KrippendorffAlpha(benchmark::State& state) {
  ga::Rng rng(3);
  ga::RatingTable table(static_cast<std::size_t>(state.range(0)));
  for (auto& row : table) {
    for (int c = 0; c < 6; ++c) row.push_back(1 + static_cast<int>(rng.Uniform() * 10.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(ga::KrippendorffAlpha(table, ga::AlphaMetric::kOrdinal));
}
BENCHMARK(BM_KrippendorffAlpha)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
