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

#ifndef GRADER_AUDIT_COMPARE_HPP_
#define GRADER_AUDIT_COMPARE_HPP_

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "grader_audit/design.hpp"
#include "grader_audit/inference.hpp"

namespace grader_audit {

// S draws x N observations of log p(y_i | theta_s), row-major.
struct PointwiseLogLik {
  int draws = 0;
  int obs = 0;
  std::vector<double> values;

  double at(int s, int i) const {
    return values[static_cast<std::size_t>(s) * static_cast<std::size_t>(obs) +
                  static_cast<std::size_t>(i)];
  }
  std::vector<double> Column(int i) const;
};

// Throws kShapeMismatch when the draws were not produced for this model.
PointwiseLogLik PointwiseLoglik(const Model& model, const PosteriorDraws& draws);
PointwiseLogLik PointwiseLoglik(const ModelSpec& spec, const Dataset& ds,
                                const PosteriorDraws& draws);

struct WaicResult {
  double elpd = 0.0;
  double p_eff = 0.0;
  double se = 0.0;
  std::vector<double> pointwise;
};
// Throws kTooFewDraws when S < 2.
WaicResult Waic(const PointwiseLogLik& ll);

struct GpdFit {
  double k = 0.0;
  double sigma = 0.0;
};
// Generalized Pareto fit to positive exceedances (any order) by the
// profile-likelihood grid method of Zhang and Stephens. `shrink` applies
// the weak prior that pulls k toward 0.5 for small samples.
GpdFit FitGpd(std::vector<double> exceedances, bool shrink = true);
// Quantile of GPD(0, sigma, k) at probability p.
double GpdQuantile(double p, double k, double sigma);

struct PsisWeights {
  std::vector<double> log_weights;  // unnormalized
  double k = 0.0;
  // No spread in the tail, so no Pareto fit was possible.
  bool degenerate = false;
};
// Pareto-smoothed log importance weights for one observation.
PsisWeights PsisSmooth(const std::vector<double>& log_ratios);

inline constexpr double kParetoKThreshold = 0.7;

struct LooResult {
  double elpd = 0.0;
  double p_eff = 0.0;
  double se = 0.0;
  std::vector<double> pointwise;
  // NaN where the fit is degenerate.
  std::vector<double> pareto_k;
  std::vector<bool> degenerate;
  int n_high_k = 0;
};
// Throws kTooFewDraws when S < 2.
LooResult PsisLoo(const PointwiseLogLik& ll);

// Everything compare_models needs from one fitted model.
struct ModelFit {
  std::string name;
  std::string fingerprint;
  WaicResult waic;
  LooResult loo;
};

struct ComparisonEntry {
  std::string name;
  double elpd_loo = 0.0;
  double se_loo = 0.0;
  double p_loo = 0.0;
  double elpd_waic = 0.0;
  double se_waic = 0.0;
  double p_waic = 0.0;
  int n_high_k = 0;
  // Relative to the top-ranked model (zero for it), with the SE of the
  // paired pointwise differences.
  double delta_elpd = 0.0;
  double delta_se = 0.0;
};

struct ComparisonReport {
  std::string fingerprint;
  std::vector<ComparisonEntry> ranking;
};

// Sorted by elpd_loo, best first; ties broken by name. Throws
// kDatasetMismatch when fingerprints differ and kInvalidConfig on an empty
// list.
ComparisonReport CompareModels(const std::vector<ModelFit>& fits);

void to_json(nlohmann::json& j, const WaicResult& w);
void to_json(nlohmann::json& j, const LooResult& l);
void to_json(nlohmann::json& j, const ComparisonReport& r);
// model,elpd_loo,se_loo,elpd_waic,se_waic,delta_elpd,delta_se
std::string ToCsv(const ComparisonReport& r);

}  // namespace grader_audit

#endif  // GRADER_AUDIT_COMPARE_HPP_
