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

#ifndef GRADER_AUDIT_INFERENCE_HPP_
#define GRADER_AUDIT_INFERENCE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "grader_audit/design.hpp"
#include "grader_audit/random.hpp"

namespace grader_audit {

struct SamplerConfig {
  int chains = 4;
  int warmup_iterations = 1000;
  int sampling_iterations = 1000;
  double target_accept = 0.8;
  int max_leapfrog_steps = 1024;
  std::uint64_t seed = 0;
  // Upper bound on chains run concurrently; 0 reads GRADER_AUDIT_THREADS,
  // falling back to the hardware concurrency.
  int threads = 0;

  // Throws kInvalidConfig.
  void Validate() const;
};

// Any differentiable log density on R^d. Evaluate must not throw; it returns
// a non-finite value (and optionally a description) outside the support.
class LogDensityTarget {
 public:
  virtual ~LogDensityTarget() = default;
  virtual int dim() const = 0;
  virtual double Evaluate(std::span<const double> u, std::span<double> gradient,
                          std::string* where) const = 0;
};

// Independent standard normals; used to check the sampler against known
// moments.
class StandardNormalTarget final : public LogDensityTarget {
 public:
  explicit StandardNormalTarget(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  double Evaluate(std::span<const double> u, std::span<double> gradient,
                  std::string* where) const override;

 private:
  int dim_;
};

// Unconstrained-space output of one chain.
struct ChainResult {
  // iterations x dim, row-major.
  std::vector<double> draws;
  int divergences = 0;
  double step_size = 0.0;
  std::vector<double> inverse_metric;
  double mean_accept = 0.0;
  double mean_leapfrog = 0.0;
};

// Runs cfg.chains independent chains on `target`, starting each from
// init[chain]. Throws kNonFiniteAtInit and kAllDivergent.
std::vector<ChainResult> SampleTarget(const LogDensityTarget& target,
                                      const SamplerConfig& cfg,
                                      const std::vector<std::vector<double>>& init);

class PosteriorDraws {
 public:
  PosteriorDraws() = default;
  PosteriorDraws(std::vector<std::string> names, int n_free, int chains,
                 int iterations, std::vector<double> values);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t n_columns() const { return names_.size(); }
  // Leading columns holding the constrained parameter vector in layout
  // order; the rest are derived (e.g. the implied last effect-coded level).
  int n_free() const { return n_free_; }
  int chains() const { return chains_; }
  int iterations() const { return iterations_; }
  int total() const { return chains_ * iterations_; }

  double at(int chain, int iter, std::size_t column) const;
  std::span<const double> Row(int chain, int iter) const;
  std::span<const double> Theta(int chain, int iter) const;
  // Draw s in chain-major order.
  std::span<const double> Row(int s) const;
  std::span<const double> Theta(int s) const;

  std::optional<std::size_t> IndexOf(std::string_view name) const;
  // Chain-major concatenation. Throws kUnknownParameter.
  std::vector<double> Column(std::string_view name) const;
  std::vector<double> Column(std::size_t column) const;
  // Per-chain series of one column.
  std::vector<std::vector<double>> ChainSeries(std::size_t column) const;
  // Columns whose block is `block`. Throws kUnknownParameter if none.
  std::vector<std::size_t> BlockColumns(std::string_view block) const;

  // Block of a parameter name: the text before '[' ("grader[human]" ->
  // "grader", "mu_length_bias" -> "mu_length_bias").
  static std::string BlockOf(std::string_view name);

  std::vector<int> divergences;
  std::vector<double> step_size;
  std::vector<std::vector<double>> inverse_metric;
  std::vector<double> mean_accept;
  std::uint64_t seed = 0;

 private:
  std::vector<std::string> names_;
  int n_free_ = 0;
  int chains_ = 0;
  int iterations_ = 0;
  std::vector<double> values_;
};

// Starting point on the unconstrained scale. Effects, slopes, the intercept
// and hypermeans get uniform(-2, 2) jitter (zero when jitter is off); scales
// start at 1 and cutpoints at the prior means.
std::vector<double> Initialize(const ModelSpec& spec,
                               const ParameterLayout& layout, Rng& rng,
                               bool jitter = true);

// Derived columns appended to the draws: names and per-theta evaluation.
std::vector<std::string> DerivedNames(const Model& model);
void AppendDerived(const Model& model, std::span<const double> theta,
                   std::vector<double>& row);

// Fits `spec` to `ds`. Deterministic in (spec, ds, cfg).
PosteriorDraws Sample(const ModelSpec& spec, const Dataset& ds,
                      const SamplerConfig& cfg);
PosteriorDraws Sample(const Model& model, const SamplerConfig& cfg,
                      bool jitter = true);

// Split-R-hat of one series set (chains x iterations). +inf when the
// within-chain variance is zero but chains disagree. Throws kTooFewDraws.
double SplitRhat(const std::vector<std::vector<double>>& chains);

struct EssResult {
  double value = 0.0;
  // Set when the series has no within-chain variation.
  bool degenerate = false;
};
// Multi-chain initial-positive-sequence ESS over split chains, capped at 1.5
// times the draw count. Throws kTooFewDraws.
EssResult EffectiveSampleSize(const std::vector<std::vector<double>>& chains);

std::vector<double> Rhat(const PosteriorDraws& draws, std::string_view block);
std::vector<double> Ess(const PosteriorDraws& draws, std::string_view block);

inline constexpr double kRhatThreshold = 1.05;
inline constexpr double kEssThreshold = 100.0;

struct Diagnostics {
  std::vector<std::string> names;
  std::vector<double> rhat;
  std::vector<double> ess;
  std::vector<int> divergences;
  std::vector<double> step_size;
  std::vector<double> mean_accept;
  bool converged = false;
  // Why the fit is not converged; empty when it is.
  std::string note;
};

// R-hat and ESS of every column. With fewer than 2 chains or 4 draws the
// fit cannot be assessed and is reported as not converged.
Diagnostics Diagnose(const PosteriorDraws& draws);

void to_json(nlohmann::json& j, const Diagnostics& d);

// One row per draw: chain, iteration, then every column; 17 significant
// digits so values round-trip.
void WriteDrawsCsv(const PosteriorDraws& draws, const std::filesystem::path& path);
// Throws kIo / kMalformedCsv.
PosteriorDraws ReadDrawsCsv(const std::filesystem::path& path, int n_free);

}  // namespace grader_audit

#endif  // GRADER_AUDIT_INFERENCE_HPP_
