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

#include "grader_audit/likelihoods.hpp"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "grader_audit/inference.hpp"
#include "grader_audit/random.hpp"
#include "grader_audit/simulate.hpp"
#include "test_util.hpp"

namespace grader_audit {
namespace {

// Frozen high-precision values from tests/oracles/compute_oracles.py.
constexpr double kOrderedMiddleK3 = -0.77193683290530472507;
constexpr double kHalfCauchyAtOne = -1.1447298858494001741;
constexpr double kStdNormalAtZero = -0.91893853320467274178;

std::vector<double> RandomCutpoints(Rng& rng, int n) {
  std::vector<double> c{rng.Uniform(-5.0, 0.0)};
  for (int j = 1; j < n; ++j) c.push_back(c.back() + rng.Uniform(0.05, 2.0));
  return c;
}

TEST(OrderedLogistic, TwoCategoriesAtZero) {
  const std::vector<double> c{0.0};
  EXPECT_NEAR(OrderedLogisticLogPmf(1, 0.0, c), std::log(0.5), 1e-15);
}

TEST(OrderedLogistic, MiddleCategoryOracle) {
  const std::vector<double> c{-1.0, 1.0};
  EXPECT_NEAR(OrderedLogisticLogPmf(2, 0.0, c), kOrderedMiddleK3, 1e-14);
}

TEST(OrderedLogistic, SumsToOne) {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = 2 + static_cast<int>(rng.Below(10));
    const auto c = RandomCutpoints(rng, k - 1);
    const double phi = rng.Uniform(-25.0, 25.0);
    double total = 0.0;
    for (int s = 1; s <= k; ++s) total += std::exp(OrderedLogisticLogPmf(s, phi, c));
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(OrderedLogistic, StableFarFromCutpoints) {
  const std::vector<double> c{-1.0, 1.0};
  const double lp = OrderedLogisticLogPmf(2, 60.0, c);
  EXPECT_TRUE(std::isfinite(lp));
  // P(2) ~ exp(1 - 60) - exp(-1 - 60) for large phi.
  EXPECT_NEAR(lp, -59.0 + std::log1p(-std::exp(-2.0)), 1e-9);
}

TEST(OrderedLogistic, BadScoreThrows) {
  const std::vector<double> c{0.0};
  EXPECT_ERROR_KIND(OrderedLogisticLogPmf(3, 0.0, c), kInvalidScore);
  EXPECT_ERROR_KIND(OrderedLogisticLogPmf(0, 0.0, c), kInvalidScore);
}

TEST(OrderedLogistic, UpperTailIncreasesWithPhi) {
  Rng rng(3);
  const auto c = RandomCutpoints(rng, 6);
  for (int j = 2; j <= 7; ++j) {
    double prev = -1.0;
    for (double phi = -8.0; phi <= 8.0; phi += 0.5) {
      double tail = 0.0;
      for (int s = j; s <= 7; ++s) tail += std::exp(OrderedLogisticLogPmf(s, phi, c));
      EXPECT_GT(tail, prev);
      prev = tail;
    }
  }
}

TEST(OrderedLogistic, ShiftInvariance) {
  Rng rng(4);
  const auto c = RandomCutpoints(rng, 4);
  auto shifted = c;
  for (double& v : shifted) v += 1.7;
  for (int s = 1; s <= 5; ++s) {
    EXPECT_NEAR(OrderedLogisticLogPmf(s, 0.3, c), OrderedLogisticLogPmf(s, 2.0, shifted), 1e-12);
  }
}

TEST(OrderedLogistic, GradientMatchesDifferences) {
  Rng rng(8);
  const auto c = RandomCutpoints(rng, 5);
  const double h = 1e-6;
  for (int s = 1; s <= 6; ++s) {
    const double phi = rng.Uniform(-3.0, 3.0);
    const auto g = OrderedLogisticLogPmfGrad(s, phi, c);
    EXPECT_NEAR(g.log_prob, OrderedLogisticLogPmf(s, phi, c), 1e-14);
    const double fd = (OrderedLogisticLogPmf(s, phi + h, c) - OrderedLogisticLogPmf(s, phi - h, c)) / (2 * h);
    EXPECT_NEAR(g.d_phi, fd, 1e-7);
  }
}

TEST(BernoulliLogit, Basics) {
  EXPECT_NEAR(BernoulliLogitLogPmf(1, 0.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(BernoulliLogitLogPmf(0, 0.0), std::log(0.5), 1e-15);
  for (double eta = -40.0; eta <= 40.0; eta += 0.37) {
    EXPECT_EQ(BernoulliLogitLogPmf(1, eta), BernoulliLogitLogPmf(0, -eta));
    EXPECT_TRUE(std::isfinite(BernoulliLogitLogPmf(0, eta)));
  }
}

TEST(CutpointTransform, UnitGaps) {
  const std::vector<double> z{-4.0, 0.0, 0.0};
  const auto t = CutpointsFromUnconstrained(z);
  ASSERT_EQ(t.cutpoints.size(), 3u);
  EXPECT_NEAR(t.cutpoints[0], -4.0, 1e-15);
  EXPECT_NEAR(t.cutpoints[1], -2.7, 1e-15);
  EXPECT_NEAR(t.cutpoints[2], -1.4, 1e-15);
  EXPECT_EQ(t.log_jacobian, 0.0);
}

TEST(CutpointTransform, IncreasingAndInvertible) {
  Rng rng(21);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> z(9);
    for (double& v : z) v = rng.Normal(0.0, 3.0);
    const auto t = CutpointsFromUnconstrained(z);
    double jac = 0.0;
    for (std::size_t j = 1; j < z.size(); ++j) {
      EXPECT_GE(t.cutpoints[j] - t.cutpoints[j - 1], 0.3);
      jac += z[j];
    }
    EXPECT_NEAR(t.log_jacobian, jac, 1e-12);
    const auto back = CutpointsToUnconstrained(t.cutpoints);
    for (std::size_t j = 0; j < z.size(); ++j) EXPECT_NEAR(back[j], z[j], 1e-10);
  }
}

TEST(Prior, Densities) {
  EXPECT_NEAR(PriorLogDensity({PriorFamily::kNormal, 0.0, 1.0}, 0.0), kStdNormalAtZero, 1e-15);
  EXPECT_NEAR(PriorLogDensity({PriorFamily::kHalfCauchy, 0.0, 1.0}, 1.0), kHalfCauchyAtOne, 1e-15);
  EXPECT_EQ(PriorLogDensity({PriorFamily::kHalfNormal, 0.0, 1.0}, -0.1),
            -std::numeric_limits<double>::infinity());
  double d = 0.0;
  PriorLogDensity({PriorFamily::kLogNormal, -0.5, 0.3}, 0.8, d);
  const double h = 1e-6;
  const double fd = (PriorLogDensity({PriorFamily::kLogNormal, -0.5, 0.3}, 0.8 + h) -
                     PriorLogDensity({PriorFamily::kLogNormal, -0.5, 0.3}, 0.8 - h)) / (2 * h);
  EXPECT_NEAR(d, fd, 1e-7);
}

TEST(Prior, InterceptOnly) {
  const Dataset ds = Simulate(DefaultScenario("q5_no_length", 1)).data;
  ModelSpec spec = MakePreset(Preset::kQ5NoLength);
  spec.terms.clear();
  ParameterVector p = ParameterVector::Neutral(spec, ParameterLayout(spec, ds));
  p.Set("intercept", 0.0);
  EXPECT_NEAR(PriorLogPdf(p, spec), kStdNormalAtZero, 1e-15);
}

TEST(Prior, NegativeHyperscaleThrows) {
  const Dataset ds = Simulate(DefaultScenario("q3", 1)).data;
  const ModelSpec spec = MakePreset(Preset::kQ3Hier);
  ParameterVector p = ParameterVector::Neutral(spec, ParameterLayout(spec, ds));
  p.Set("sigma_grader[human]", -0.1);
  EXPECT_ERROR_KIND(PriorLogPdf(p, spec), kNonPositiveScale);
}

const char* ScenarioFor(Preset p) {
  switch (p) {
    case Preset::kQ1_1:
    case Preset::kQ1_1Null: return "q1_1";
    case Preset::kQ1_2: return "q1_2";
    case Preset::kQ2: return "q2";
    case Preset::kQ3Flat:
    case Preset::kQ3Hier: return "q3";
    case Preset::kQ4: return "q4";
    default: return "q5";
  }
}

class PresetDensity : public ::testing::TestWithParam<Preset> {};

TEST_P(PresetDensity, GradientMatchesCentralDifferences) {
  const Dataset ds = Simulate(DefaultScenario(ScenarioFor(GetParam()), 9)).data;
  const Model model(MakePreset(GetParam()), ds);
  const JointDensity density(model);
  Rng rng(99);
  const double h = 1e-5;
  for (int point = 0; point < 20; ++point) {
    auto u = Initialize(model.spec(), model.layout(), rng, true);
    for (double& v : u) v += rng.Normal(0.0, 0.3);
    std::vector<double> g(u.size());
    density.Evaluate(u, g);
    std::vector<double> scratch(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
      auto up = u, down = u;
      up[k] += h;
      down[k] -= h;
      const double fd = (density.Evaluate(up, scratch) - density.Evaluate(down, scratch)) / (2 * h);
      const double rel = std::abs(g[k] - fd) / std::max({std::abs(g[k]), std::abs(fd), 1.0});
      EXPECT_LT(rel, 1e-6) << model.layout().names()[k] << " at point " << point;
    }
  }
}

TEST_P(PresetDensity, ValueIsLikelihoodPlusPriorPlusJacobian) {
  const Dataset ds = Simulate(DefaultScenario(ScenarioFor(GetParam()), 9)).data;
  const Model model(MakePreset(GetParam()), ds);
  Rng rng(1);
  const auto u = Initialize(model.spec(), model.layout(), rng, true);
  double jac = 0.0;
  const auto theta = Constrain(model, u, &jac);
  const JointDensity density(model);
  const auto r = JointLogDensity(model, u);
  EXPECT_NEAR(r.value, density.LogLikelihood(theta) + density.LogPrior(theta) + jac, 1e-8);
  const auto back = Unconstrain(model, theta);
  for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(back[k], u[k], 1e-10);
}

TEST_P(PresetDensity, EmptyDataLeavesPriorAndJacobian) {
  const Dataset ds = Simulate(DefaultScenario(ScenarioFor(GetParam()), 9)).data;
  const Dataset empty = ds.Subset({});
  const ModelSpec spec = MakePreset(GetParam());
  // Standardizing the length covariate needs at least two records.
  if (GetParam() == Preset::kQ5) GTEST_SKIP() << "length covariate needs records";
  const Model model(spec, empty);
  Rng rng(2);
  const auto u = Initialize(spec, model.layout(), rng, true);
  double jac = 0.0;
  const auto theta = Constrain(model, u, &jac);
  EXPECT_NEAR(JointLogDensity(model, u).value, JointDensity(model).LogPrior(theta) + jac, 1e-10);
}

TEST_P(PresetDensity, DuplicatingRecordsDoublesLikelihood) {
  // Doubling the records changes the (n - 1) SD of the length covariate.
  if (GetParam() == Preset::kQ5) GTEST_SKIP() << "covariate is restandardized";
  const Dataset ds = Simulate(DefaultScenario(ScenarioFor(GetParam()), 9)).data;
  const ModelSpec spec = MakePreset(GetParam());
  const Model once(spec, ds);
  const Model twice(spec, ds.Repeated(2));
  Rng rng(3);
  const auto u = Initialize(spec, once.layout(), rng, true);
  double jac = 0.0;
  const auto theta = Constrain(once, u, &jac);
  const double prior = JointDensity(once).LogPrior(theta);
  const double a = JointLogDensity(once, u).value - prior - jac;
  const double b = JointLogDensity(twice, u).value - prior - jac;
  EXPECT_NEAR(b, 2 * a, 1e-9 * std::abs(a));
}

INSTANTIATE_TEST_SUITE_P(AllPresets, PresetDensity, ::testing::ValuesIn(kAllPresets),
                         [](const auto& info) { return std::string(ToString(info.param)); });

TEST(JointLogDensity, WrongSizeThrows) {
  const Dataset ds = Simulate(DefaultScenario("q1_1", 1)).data;
  const Model model(MakePreset(Preset::kQ1_1), ds);
  const std::vector<double> u(3, 0.0);
  EXPECT_ERROR_KIND(JointLogDensity(model, u), kShapeMismatch);
}

TEST(JointLogDensity, PointwiseSumsToLikelihood) {
  const Dataset ds = Simulate(DefaultScenario("q2", 1)).data;
  const Model model(MakePreset(Preset::kQ2), ds);
  Rng rng(6);
  const auto theta = Constrain(model, Initialize(model.spec(), model.layout(), rng, true));
  const JointDensity density(model);
  std::vector<double> pw(model.n_obs());
  density.PointwiseLogLikelihood(theta, pw);
  double total = 0.0;
  for (double v : pw) {
    EXPECT_LT(v, 0.0);
    total += v;
  }
  EXPECT_NEAR(total, density.LogLikelihood(theta), 1e-8);
}

}  // namespace
}  // namespace grader_audit
