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

#ifndef GRADER_AUDIT_LIKELIHOODS_HPP_
#define GRADER_AUDIT_LIKELIHOODS_HPP_

#include <span>
#include <string>
#include <vector>

#include "grader_audit/design.hpp"

namespace grader_audit {

double InvLogit(double x);
// log(inv_logit(x)) without overflow.
double LogInvLogit(double x);
// log(1 - exp(x)) for x < 0.
double Log1mExp(double x);

// log P(score | phi, c) under the cumulative-logit ordered model with
// c_0 = -inf and c_K = +inf. Throws kInvalidScore.
double OrderedLogisticLogPmf(int score, double phi,
                             std::span<const double> cutpoints);

// Value and partial derivatives of log P(score | phi, c). Only cutpoints
// `lower` (score - 2) and `upper` (score - 1) enter; an absent one has
// index -1.
struct OrderedLogisticTerms {
  double log_prob = 0.0;
  double d_phi = 0.0;
  int lower = -1;
  double d_lower = 0.0;
  int upper = -1;
  double d_upper = 0.0;
};
OrderedLogisticTerms OrderedLogisticLogPmfGrad(
    int score, double phi, std::span<const double> cutpoints);

// y * log(inv_logit(eta)) + (1 - y) * log(inv_logit(-eta)).
double BernoulliLogitLogPmf(int y, double eta);

struct CutpointTransform {
  std::vector<double> cutpoints;
  double log_jacobian = 0.0;
};
// c_1 = z_1, c_j = c_{j-1} + exp(z_j) + shift; log-Jacobian sum_{j>=2} z_j.
CutpointTransform CutpointsFromUnconstrained(std::span<const double> z,
                                             double shift = 0.3);
std::vector<double> CutpointsToUnconstrained(std::span<const double> cutpoints,
                                             double shift = 0.3);

// Log density of `prior` at x; -inf outside the support.
double PriorLogDensity(const Prior& prior, double x);
// Same, also returning d/dx.
double PriorLogDensity(const Prior& prior, double x, double& derivative);

// Sum of log prior densities of every block, including the conditional
// densities of hierarchical members. Throws kNonPositiveScale for a
// non-positive hyperscale and kShapeMismatch for bad cutpoint gaps.
double PriorLogPdf(const ParameterVector& params, const ModelSpec& spec);

// Unconstrained <-> constrained mapping of a model's parameter vector.
std::vector<double> Constrain(const Model& model, std::span<const double> u,
                              double* log_jacobian = nullptr);
std::vector<double> Unconstrain(const Model& model,
                                std::span<const double> theta);

struct DensityResult {
  double value = 0.0;
  std::vector<double> gradient;
};

// Log posterior on the unconstrained scale (likelihood + prior + Jacobian)
// with its analytic gradient.
class JointDensity {
 public:
  explicit JointDensity(const Model& model) : model_(&model) {}

  const Model& model() const { return *model_; }
  int dim() const { return model_->layout().dim(); }

  // Writes the gradient into `gradient` (size dim()). Returns a possibly
  // non-finite value; `where`, when given, names the first non-finite term.
  double Evaluate(std::span<const double> u, std::span<double> gradient,
                  std::string* where = nullptr) const;

  // Parts of the density at constrained theta.
  double LogLikelihood(std::span<const double> theta) const;
  double LogPrior(std::span<const double> theta) const;
  // log p(y_i | theta) for every record, written to `out` (size n_obs()).
  void PointwiseLogLikelihood(std::span<const double> theta,
                              std::span<double> out) const;

 private:
  const Model* model_;
};

// Throws kNonFiniteDensity naming the first non-finite intermediate and
// kShapeMismatch on a wrong-sized u.
DensityResult JointLogDensity(const Model& model, std::span<const double> u);

}  // namespace grader_audit

#endif  // GRADER_AUDIT_LIKELIHOODS_HPP_
