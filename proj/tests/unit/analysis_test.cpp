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

#include "grader_audit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "grader_audit/likelihoods.hpp"
#include "grader_audit/random.hpp"
#include "grader_audit/simulate.hpp"
#include "test_util.hpp"

namespace grader_audit {
namespace {

// Frozen Krippendorff oracles (brute-force coincidence matrices computed
// with exact rationals in tests/oracles/compute_oracles.py).
constexpr double kAlpha4x2Ordinal = 0.40544871794871794872;
constexpr double kAlpha4x2Interval = 0.44444444444444444444;
constexpr double kAlpha5x3Ordinal = 0.68025606469002695418;
constexpr double kAlpha5x3Interval = 0.6875;

const RatingTable kTable4x2 = {{1, 1}, {2, 3}, {3, 3}, {4, 2}};
const RatingTable kTable5x3 = {{1, 2, 1},
                               {3, 3, std::nullopt},
                               {2, 2, 3},
                               {4, 4, 4},
                               {1, std::nullopt, std::nullopt},
                               {2, 4, 3}};

PosteriorDraws Constant(const std::string& name, double v, int n = 40) {
  return PosteriorDraws({name}, 1, 2, n / 2, std::vector<double>(n, v));
}

TEST(Summarize, ConstantDraws) {
  const std::vector<double> x(100, 0.7);
  const Summary s = Summarize("c", x);
  EXPECT_NEAR(s.mean, 0.7, 1e-12);
  EXPECT_NEAR(s.ci_low, 0.7, 1e-15);
  EXPECT_NEAR(s.ci_high, 0.7, 1e-15);
}

TEST(Summarize, SymmetricDraws) {
  std::vector<double> x;
  for (int i = 0; i < 50; ++i) {
    x.push_back(1.0);
    x.push_back(-1.0);
  }
  EXPECT_EQ(Summarize("s", x).mean, 0.0);
}

TEST(Summarize, NormalQuantiles) {
  Rng rng(10);
  std::vector<double> x(10000);
  for (double& v : x) v = rng.Normal();
  const Summary s = Summarize("n", x);
  EXPECT_NEAR(s.ci_low, -1.959964, 0.1);
  EXPECT_NEAR(s.ci_high, 1.959964, 0.1);
  EXPECT_NEAR(s.sd, 1.0, 0.03);
}

TEST(Summarize, TooFewDraws) {
  const std::vector<double> x{1.0, 2.0};
  EXPECT_ERROR_KIND(Summarize("x", x), kTooFewDraws);
}

TEST(Contrast, ScaledConstant) {
  const auto r = Contrast(Constant("b1", -0.45), {"twice", {{"b1", 2.0}}});
  for (double v : r.samples) EXPECT_NEAR(v, -0.9, 1e-15);
  EXPECT_EQ(r.fraction_below_zero, 1.0);
}

TEST(Contrast, ZeroWeights) {
  const auto r = Contrast(Constant("b1", 3.0), {"zero", {{"b1", 0.0}}});
  for (double v : r.samples) EXPECT_EQ(v, 0.0);
}

TEST(Contrast, Linearity) {
  Rng rng(4);
  std::vector<double> v(2 * 60);
  for (double& x : v) x = rng.Normal();
  const PosteriorDraws d({"a", "b"}, 2, 3, 20, v);
  const auto c1 = Contrast(d, {"1", {{"a", 1.5}, {"b", -0.5}}});
  const auto c2 = Contrast(d, {"2", {{"a", -0.25}, {"b", 2.0}}});
  const auto c12 = Contrast(d, {"12", {{"a", 1.25}, {"b", 1.5}}});
  for (std::size_t s = 0; s < c12.samples.size(); ++s) {
    EXPECT_NEAR(c12.samples[s], c1.samples[s] + c2.samples[s], 1e-14);
  }
}

TEST(Contrast, UnknownParameter) {
  EXPECT_ERROR_KIND(Contrast(Constant("a", 1.0), {"x", {{"nope", 1.0}}}), kUnknownParameter);
}

TEST(Rope, Defaults) {
  EXPECT_EQ(kRopeLow, -0.18);
  EXPECT_EQ(kRopeHigh, 0.18);
  const RopeResult r = RopeCheck(std::vector<double>(10, 0.0));
  EXPECT_EQ(r.low, -0.18);
  EXPECT_EQ(r.high, 0.18);
}

TEST(Rope, Verdicts) {
  const auto zero = RopeCheck(std::vector<double>(100, 0.0));
  EXPECT_EQ(zero.fraction_inside, 1.0);
  EXPECT_EQ(zero.verdict, RopeVerdict::kPracticallyEquivalent);
  const auto half = RopeCheck(std::vector<double>(100, 0.5));
  EXPECT_EQ(half.fraction_inside, 0.0);
  EXPECT_EQ(half.verdict, RopeVerdict::kNotEquivalent);
  std::vector<double> wide;
  for (int i = 0; i < 101; ++i) wide.push_back(-0.5 + i * 0.01);
  EXPECT_EQ(RopeCheck(wide).verdict, RopeVerdict::kUndecided);
  EXPECT_ERROR_KIND(RopeCheck(std::vector<double>{}), kEmptySamples);
}

TEST(Rope, PermutationInvariant) {
  Rng rng(6);
  std::vector<double> x(300);
  for (double& v : x) v = rng.Normal(0.1, 0.2);
  const auto a = RopeCheck(x);
  std::reverse(x.begin(), x.end());
  std::rotate(x.begin(), x.begin() + 17, x.end());
  const auto b = RopeCheck(x);
  EXPECT_EQ(a.verdict, b.verdict);
  EXPECT_EQ(a.fraction_inside, b.fraction_inside);
}

// A q1_1 model with explicit parameters.
struct Q11 {
  Dataset data = Simulate(DefaultScenario("q1_1", 21)).data;
  Model model{MakePreset(Preset::kQ1_1), data};
  std::vector<double> Theta(double intercept, double grader) const {
    ParameterVector p = ParameterVector::Neutral(model.spec(), model.layout());
    p.Set("intercept", intercept);
    p.Set("grader[autograder]", grader);
    return {p.values().begin(), p.values().end()};
  }
};

TEST(Predict, SaturatesAtLowestScore) {
  const Q11 q;
  Rng rng(1);
  const auto theta = q.Theta(-30.0, 0.0);
  for (int rep = 0; rep < 20; ++rep) {
    for (int y : PredictOutcomes(q.model, theta, PredictMode::kFull, rng)) EXPECT_EQ(y, 1);
  }
}

TEST(Predict, ModesCoincideWithoutGraderEffect) {
  const Q11 q;
  const auto theta = q.Theta(0.3, 0.0);
  Rng a(5), b(5);
  EXPECT_EQ(PredictOutcomes(q.model, theta, PredictMode::kFull, a),
            PredictOutcomes(q.model, theta, PredictMode::kRemoveGraderMain, b));
}

std::vector<double> Frequencies(const std::vector<int>& counts) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::vector<double> f;
  for (int c : counts) f.push_back(c / n);
  return f;
}

TEST(Predict, FrequenciesMatchPmf) {
  const Q11 q;
  const auto theta = q.Theta(0.4, -0.8);
  const auto cuts = q.model.Cutpoints(theta);
  Rng rng(7);
  // Record 0 is an autograder record; 10^5 replicates of it.
  std::vector<int> counts(10, 0), counts_cf(10, 0);
  std::vector<int> by_grader[2] = {std::vector<int>(10, 0), std::vector<int>(10, 0)};
  for (int rep = 0; rep < 1000; ++rep) {
    const auto y = PredictOutcomes(q.model, theta, PredictMode::kFull, rng);
    const auto z = PredictOutcomes(q.model, theta, PredictMode::kRemoveGraderMain, rng);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const int g = q.data.scores()[i].grader;
      if (g == 0) ++counts[y[i] - 1];
      ++by_grader[g][z[i] - 1];
    }
  }
  const auto f = Frequencies(counts);
  const auto h0 = Frequencies(by_grader[0]);
  const auto h1 = Frequencies(by_grader[1]);
  for (int s = 1; s <= 10; ++s) {
    EXPECT_NEAR(f[s - 1], std::exp(OrderedLogisticLogPmf(s, 0.4 - 0.8, cuts)), 0.01);
    EXPECT_NEAR(h0[s - 1], std::exp(OrderedLogisticLogPmf(s, 0.4, cuts)), 0.01);
    EXPECT_NEAR(h0[s - 1], h1[s - 1], 0.01);
  }
}

TEST(Predict, ThinnedIndices) {
  EXPECT_EQ(ThinnedDrawIndices(10, 20).size(), 10u);
  const auto t = ThinnedDrawIndices(1000, 4);
  EXPECT_EQ(t, (std::vector<int>{0, 250, 500, 750}));
}

TEST(Krippendorff, Oracles) {
  EXPECT_NEAR(KrippendorffAlpha(kTable4x2, AlphaMetric::kOrdinal), kAlpha4x2Ordinal, 1e-12);
  EXPECT_NEAR(KrippendorffAlpha(kTable4x2, AlphaMetric::kInterval), kAlpha4x2Interval, 1e-12);
  EXPECT_NEAR(KrippendorffAlpha(kTable5x3, AlphaMetric::kOrdinal), kAlpha5x3Ordinal, 1e-12);
  EXPECT_NEAR(KrippendorffAlpha(kTable5x3, AlphaMetric::kInterval), kAlpha5x3Interval, 1e-12);
}

TEST(Krippendorff, PerfectAgreement) {
  const RatingTable t = {{1, 1, 1}, {4, 4, std::nullopt}, {2, 2, 2}, {7, 7, 7}};
  EXPECT_EQ(KrippendorffAlpha(t, AlphaMetric::kOrdinal), 1.0);
  EXPECT_EQ(KrippendorffAlpha(t, AlphaMetric::kInterval), 1.0);
}

TEST(Krippendorff, Errors) {
  EXPECT_ERROR_KIND(KrippendorffAlpha({{3, 3}, {3, 3}}, AlphaMetric::kOrdinal), kNoVariation);
  EXPECT_ERROR_KIND(KrippendorffAlpha({{3, std::nullopt}, {std::nullopt, 2}}, AlphaMetric::kOrdinal),
                    kTooFewRatings);
}

TEST(Krippendorff, NeverAboveOne) {
  Rng rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    RatingTable t(6, std::vector<std::optional<int>>(3));
    for (auto& row : t) {
      for (auto& v : row) {
        if (rng.Uniform() < 0.8) v = 1 + static_cast<int>(rng.Below(5));
      }
    }
    try {
      EXPECT_LE(KrippendorffAlpha(t, AlphaMetric::kOrdinal), 1.0 + 1e-12);
      EXPECT_LE(KrippendorffAlpha(t, AlphaMetric::kInterval), 1.0 + 1e-12);
    } catch (const Error&) {
      // Degenerate random tables are allowed to be rejected.
    }
  }
}

TEST(Krippendorff, MetricNames) {
  EXPECT_EQ(ParseAlphaMetric("interval"), AlphaMetric::kInterval);
  EXPECT_EQ(ParseAlphaMetric("ordinal"), AlphaMetric::kOrdinal);
  EXPECT_FALSE(ParseAlphaMetric("nominal").has_value());
}

PosteriorDraws QuickFit(const Model& model, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.warmup_iterations = 200;
  cfg.sampling_iterations = 200;
  cfg.seed = seed;
  return Sample(model, cfg);
}

TEST(Agreement, ObservedMatchesRawTable) {
  const Dataset ds = Simulate(DefaultScenario("q4", 2)).data;
  const ModelSpec spec = MakePreset(Preset::kQ1_2);
  const PosteriorDraws d = QuickFit(Model(spec, ds), 2);
  const auto r = Agreement(spec, ds, d, AlphaMetric::kOrdinal, 50, 1);
  EXPECT_EQ(r.alpha_observed, KrippendorffAlpha(AgreementTable(ds), AlphaMetric::kOrdinal));
  EXPECT_EQ(r.posterior.samples.size(), 50u);
}

TEST(Agreement, NullGraderEffectsOverlap) {
  ScenarioConfig cfg = DefaultScenario("q3", 3);
  cfg.items = {"i1", "i2", "i3", "i4", "i5", "i6", "i7", "i8"};
  cfg.repeats = 5;
  for (auto& [g, v] : cfg.truth.main["grader"]) v = 0.0;
  cfg.truth.main["item"] = {{"i1", 1.5}, {"i2", -1.5}, {"i3", 0.5}, {"i4", -0.5},
                            {"i5", 1.0}, {"i6", -1.0}, {"i7", 0.0}, {"i8", 0.0}};
  const Dataset ds = Simulate(cfg).data;
  const ModelSpec spec = MakePreset(Preset::kQ3Flat);
  const auto r = Agreement(spec, ds, QuickFit(Model(spec, ds), 3), AlphaMetric::kOrdinal, 100, 4);
  const auto& a = r.posterior.summary;
  const auto& b = r.counterfactual.summary;
  EXPECT_TRUE(a.ci_low <= b.ci_high && b.ci_low <= a.ci_high);
}

TEST(Agreement, NeedsItems) {
  DatasetBuilder b(DatasetKind::kScores);
  b.AddScore("g1", GraderType::kHuman, "A", std::nullopt, 2);
  b.AddScore("g2", GraderType::kAutograder, "A", std::nullopt, 3);
  EXPECT_ERROR_KIND(AgreementTable(std::move(b).Build(5)), kMissingItemColumn);
}

TEST(Calibration, ReferenceTable) {
  const std::vector<double> means{-4.07, -3.25, -2.39, -1.28, -0.20, 1.29, 3.11, 4.71, 5.60, 6.22};
  const std::vector<double> sizes{0.82, 0.86, 1.11, 1.08, 1.49, 1.82, 1.60, 0.89, 0.62};
  using C = IntervalClass;
  const std::vector<C> classes{C::kNarrow, C::kNarrow, C::kModerate, C::kModerate, C::kWide,
                               C::kWide,   C::kWide,   C::kNarrow,   C::kNarrow};
  const auto r = CalibrationFromCutpoints(means);
  ASSERT_EQ(r.cutpoints.size(), 10u);
  EXPECT_FALSE(r.cutpoints[0].interval.has_value());
  for (std::size_t j = 1; j < 10; ++j) {
    EXPECT_NEAR(*r.cutpoints[j].interval, sizes[j - 1], 1e-9);
    EXPECT_EQ(*r.cutpoints[j].classification, classes[j - 1]);
  }
}

TEST(Calibration, EqualGapsAreModerate) {
  std::vector<double> c;
  for (int j = 0; j < 9; ++j) c.push_back(-4.0 + 1.2 * j);
  for (const auto& e : CalibrationFromCutpoints(c).cutpoints) {
    if (e.classification) EXPECT_EQ(*e.classification, IntervalClass::kModerate);
  }
  EXPECT_EQ(ClassifyInterval(0.999), IntervalClass::kNarrow);
  EXPECT_EQ(ClassifyInterval(1.0), IntervalClass::kModerate);
  EXPECT_EQ(ClassifyInterval(1.4), IntervalClass::kWide);
}

TEST(Calibration, FittedIntervalsRespectShift) {
  const Q11 q;
  const auto r = CutpointReport(QuickFit(q.model, 9));
  for (const auto& e : r.cutpoints) {
    if (e.interval) EXPECT_GE(*e.interval, 0.3);
  }
}

TEST(Calibration, PairwiseDrawsRejected) {
  EXPECT_ERROR_KIND(CutpointReport(Constant("intercept", 0.0)), kNotOrderedModel);
}

TEST(Transitivity, ConsistentPreferences) {
  const std::vector<Preference> p{{"A", "B", 0.7}, {"B", "C", 0.6}, {"A", "C", 0.8}};
  EXPECT_FALSE(HasPreferenceCycle(p));
  EXPECT_EQ(MajorityOrder(p), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(Transitivity, ConstructedCycle) {
  const std::vector<Preference> p{{"A", "B", 0.7}, {"B", "C", 0.6}, {"C", "A", 0.7}};
  EXPECT_TRUE(HasPreferenceCycle(p));
}

TEST(Transitivity, DefaultScenarioOrdering) {
  const Dataset ds = Simulate(DefaultScenario("q5", 4)).data;
  const Model model(MakePreset(Preset::kQ5), ds);
  const auto r = TransitivityCheck(model, QuickFit(model, 4));
  EXPECT_FALSE(r.cycle);
  EXPECT_EQ(r.ordering, (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_EQ(r.pairs.size(), 3u);
}

TEST(Transitivity, TwoModelsRejected) {
  // With two LLMs there is a single pair level, which the effect-coded pair
  // term already refuses; either way no transitivity report is produced.
  ScenarioConfig cfg = DefaultScenario("q5", 1);
  cfg.llms = {"A", "B"};
  cfg.truth.main["pair"] = {{"A_vs_B", 0.2}};
  const Dataset ds = Simulate(cfg).data;
  EXPECT_THROW(
      {
        const Model model(MakePreset(Preset::kQ5), ds);
        TransitivityCheck(model, Constant("intercept", 0.0));
      },
      Error);
}

// Identified quantities at the true parameter vector equal the truth record.
void ExpectTruthConsistent(const char* scenario, Preset preset) {
  const SimulationResult sim = Simulate(DefaultScenario(scenario, 1));
  const Model model(MakePreset(preset), sim.data);
  ParameterVector p = ParameterVector::Neutral(model.spec(), model.layout());
  const Truth& t = sim.config.truth;
  p.Set("intercept", t.intercept);
  for (const auto& [factor, effects] : t.main) {
    for (const auto& [level, v] : effects) {
      const std::string name = (factor == "pair" ? "pair" : factor) + "[" + level + "]";
      if (p.layout().IndexOf(name)) p.Set(name, v);
    }
  }
  for (const auto& in : t.interactions) {
    for (const auto& [a, row] : in.values) {
      for (const auto& [b, v] : row) p.Set(in.first + "_" + in.second + "[" + a + "," + b + "]", v);
    }
  }
  const auto names = IdentifiedNames(model);
  const auto values = IdentifiedValues(model, p.values());
  const auto truth = IdentifiedTruth(sim.config, model);
  ASSERT_EQ(names.size(), values.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k].rfind("slope:", 0) == 0) continue;
    ASSERT_TRUE(truth.count(names[k])) << names[k];
    EXPECT_NEAR(values[k], truth.at(names[k]), 1e-12) << names[k];
  }
}

TEST(Identified, MatchTruthRecord) {
  ExpectTruthConsistent("q1_2", Preset::kQ1_2);
  ExpectTruthConsistent("q2", Preset::kQ2);
  ExpectTruthConsistent("q4", Preset::kQ4);
  ExpectTruthConsistent("q5_no_length", Preset::kQ5NoLength);
}

TEST(StandardContrasts, PresetContrasts) {
  const Dataset q2 = Simulate(DefaultScenario("q2", 1)).data;
  std::vector<std::string> names;
  for (const auto& c : StandardContrasts(Model(MakePreset(Preset::kQ2), q2), q2)) names.push_back(c.name);
  for (const char* want : {"autograder_minus_human", "llm:A_minus_B",
                           "self_bias:autograder_A:A_minus_B"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  }
}

TEST(Json, ReportsSerialize) {
  const nlohmann::json rope = RopeCheck(std::vector<double>(10, 0.0));
  EXPECT_EQ(rope.at("verdict"), "PracticallyEquivalent");
  const nlohmann::json cal = CalibrationFromCutpoints(std::vector<double>{-1.0, 0.5});
  EXPECT_EQ(cal.size(), 2u);
}

}  // namespace
}  // namespace grader_audit
