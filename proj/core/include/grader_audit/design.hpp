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

#ifndef GRADER_AUDIT_DESIGN_HPP_
#define GRADER_AUDIT_DESIGN_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "grader_audit/data_model.hpp"

namespace grader_audit {

enum class Likelihood { kOrderedLogistic, kBernoulliLogit };

// EffectCoded: sum-to-zero contrasts, last level is the negative anchor.
// IndexCoded: one free parameter per level (or level combination).
// DummyCoded: first level (or combination) is the zero reference.
enum class CodingScheme { kEffect, kIndex, kDummy };

enum class PriorFamily { kNormal, kHalfNormal, kHalfCauchy, kLogNormal };

struct Prior {
  PriorFamily family = PriorFamily::kNormal;
  double location = 0.0;
  double scale = 1.0;

  friend bool operator==(const Prior&, const Prior&) = default;
};

// Group name for hierarchical terms whose members all share one hyperprior.
inline constexpr std::string_view kPooledGroup = "*";

struct Term {
  std::string name;
  // One factor for main effects, two for interactions.
  std::vector<std::string> factors;
  CodingScheme coding = CodingScheme::kEffect;
  // Each coefficient multiplies this covariate (slope terms).
  std::optional<std::string> covariate;
  // Grouping factor for partial pooling: members of group g are drawn from
  // N(mu[g], sigma[g]). kPooledGroup means a single group.
  std::optional<std::string> group;
  Prior prior{PriorFamily::kNormal, 0.0, 1.0};
  Prior hyper_mean_prior{PriorFamily::kNormal, 0.0, 1.0};
  Prior hyper_scale_prior{PriorFamily::kHalfCauchy, 0.0, 1.0};

  bool hierarchical() const { return group.has_value(); }
  friend bool operator==(const Term&, const Term&) = default;
};

struct CutpointPrior {
  Prior first{PriorFamily::kNormal, -4.0, 0.2};
  // On the raw differences before the shift is added.
  Prior difference{PriorFamily::kLogNormal, -0.5, 0.3};
  double shift = 0.3;

  friend bool operator==(const CutpointPrior&, const CutpointPrior&) = default;
};

struct ModelSpec {
  std::string name;
  Likelihood likelihood = Likelihood::kOrderedLogistic;
  // K; ordered-logistic specs only.
  int n_categories = 0;
  Prior intercept_prior{PriorFamily::kNormal, 0.0, 1.0};
  CutpointPrior cutpoint_prior;
  // When set the cutpoints are held at these values instead of estimated.
  std::optional<std::vector<double>> fixed_cutpoints;
  std::vector<Term> terms;

  bool ordered() const { return likelihood == Likelihood::kOrderedLogistic; }
  const Term* FindTerm(std::string_view term_name) const;
  // Throws kInvalidSpec on duplicate names, bad factor counts, or
  // hierarchical terms that are not one-factor index-coded.
  void Validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

enum class Preset {
  kQ1_1,
  kQ1_1Null,
  kQ1_2,
  kQ2,
  kQ3Flat,
  kQ3Hier,
  kQ4,
  kQ5,
  kQ5NoLength,
};

inline constexpr Preset kAllPresets[] = {
    Preset::kQ1_1,   Preset::kQ1_1Null, Preset::kQ1_2,
    Preset::kQ2,     Preset::kQ3Flat,   Preset::kQ3Hier,
    Preset::kQ4,     Preset::kQ5,       Preset::kQ5NoLength};

std::string_view ToString(Preset preset);
// Accepts "q1_1", "Q1_1", "q3_hier", ...
std::optional<Preset> ParsePreset(std::string_view text);
bool IsPairwisePreset(Preset preset);

// Built-in model for one audit question, with the default priors attached.
// `n_categories` is ignored for the pairwise presets.
ModelSpec MakePreset(Preset preset, int n_categories = 10);

std::string_view ToString(Likelihood likelihood);
std::string_view ToString(CodingScheme coding);

void to_json(nlohmann::json& j, const Prior& prior);
void from_json(const nlohmann::json& j, Prior& prior);
void to_json(nlohmann::json& j, const Term& term);
void from_json(const nlohmann::json& j, Term& term);
void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

// Weights over the L-1 free parameters of an effect-coded factor.
// Throws kSingleLevelFactor when L < 2 and kIndexOutOfRange for a bad level.
std::vector<double> EffectCode(int n_levels, int level);
// a * LB + b. Throws kIndexOutOfRange.
int IndexCode(int a, int b, int levels_a, int levels_b);

enum class BlockKind {
  kIntercept,
  kCoefficients,
  kHyperMean,
  kHyperScale,
  kCutpoints,
};

struct Block {
  std::string name;
  BlockKind kind = BlockKind::kCoefficients;
  int offset = 0;
  int size = 0;
  // Parameter names, e.g. "grader[autograder]" or "sigma_grader[human]".
  std::vector<std::string> names;
  // Index into ModelSpec::terms, or -1.
  int term = -1;
};

// Per-term bookkeeping derived from the spec and the dataset's factors.
struct TermLayout {
  std::vector<int> levels;  // level counts of the term's factors
  std::vector<std::vector<std::string>> labels;  // level labels per factor
  int coefficients = -1;    // block index
  int hyper_mean = -1;
  int hyper_scale = -1;
  // Hierarchical terms: group index of every coefficient.
  std::vector<int> group_of;
};

// Names and positions of every parameter of a spec fitted to a dataset.
class ParameterLayout {
 public:
  ParameterLayout() = default;
  ParameterLayout(const ModelSpec& spec, const Dataset& ds);

  int dim() const { return dim_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<TermLayout>& terms() const { return terms_; }
  const std::vector<std::string>& names() const { return names_; }

  // Block by name; nullptr if absent.
  const Block* FindBlock(std::string_view name) const;
  int cutpoint_block() const { return cutpoint_block_; }
  // Parameter index by name; nullopt if absent.
  std::optional<int> IndexOf(std::string_view name) const;

 private:
  int AddBlock(std::string name, BlockKind kind,
               std::vector<std::string> names, int term);

  std::vector<Block> blocks_;
  std::vector<TermLayout> terms_;
  std::vector<std::string> names_;
  int cutpoint_block_ = -1;
  int dim_ = 0;
};

// Constrained parameter values with their names.
class ParameterVector {
 public:
  ParameterVector() = default;
  ParameterVector(ParameterLayout layout, std::vector<double> values);
  // Zeros everywhere except default-valid cutpoints and unit scales.
  static ParameterVector Neutral(const ModelSpec& spec, ParameterLayout layout);

  const ParameterLayout& layout() const { return layout_; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  // Throws kUnknownParameter.
  double Get(std::string_view name) const;
  void Set(std::string_view name, double value);
  std::span<const double> BlockValues(std::string_view block) const;

 private:
  ParameterLayout layout_;
  std::vector<double> values_;
};

// Sparse linear-predictor row: phi = sum_k weight[k] * theta[index[k]].
struct DesignRow {
  std::vector<int> index;
  std::vector<double> weight;
  // Term of each entry (-1 for the intercept).
  std::vector<int> term;

  friend auto operator<=>(const DesignRow&, const DesignRow&) = default;
};

// A spec bound to a dataset: parameter layout, one design row per record,
// and outcomes aggregated over identical rows.
class Model {
 public:
  Model(ModelSpec spec, const Dataset& ds);

  const ModelSpec& spec() const { return spec_; }
  const ParameterLayout& layout() const { return layout_; }
  std::size_t n_obs() const { return obs_cell_.size(); }
  int n_outcomes() const { return n_outcomes_; }

  // Outcome of record i: score in 1..K, or 1/0 for "first chosen" after the
  // pair has been put in canonical (lexicographic) order.
  int outcome(std::size_t i) const { return outcomes_[i]; }
  const DesignRow& row(std::size_t i) const;

  struct Cell {
    DesignRow row;
    // counts[k] = number of records with outcome index k (score - 1, or y).
    std::vector<double> counts;
  };
  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t cell_of(std::size_t i) const { return obs_cell_[i]; }

  double LinearPredictor(std::size_t i, std::span<const double> theta) const;
  // Sum of the entries of `term` in row i.
  double TermContribution(std::size_t i, int term,
                          std::span<const double> theta) const;
  // Cutpoints under theta (estimated or fixed).
  std::vector<double> Cutpoints(std::span<const double> theta) const;

  // Terms of the given single factor with no covariate (main effects).
  std::vector<int> MainEffectTerms(std::string_view factor) const;

 private:
  ModelSpec spec_;
  ParameterLayout layout_;
  int n_outcomes_ = 0;
  std::vector<int> outcomes_;
  std::vector<Cell> cells_;
  std::vector<std::size_t> obs_cell_;
};

// True when a pairwise record lists the lexicographically later model first;
// models see such records flipped into canonical order.
bool IsReversed(const Dataset& ds, const PairwiseRecord& rec);
// Standardized token-length differences in canonical orientation: the
// covariate seen by slope terms.
std::vector<double> OrientedLengthDiff(const Dataset& ds);

DesignRow BuildDesignRow(const ModelSpec& spec, const ParameterLayout& layout,
                         const Dataset& ds, std::size_t record,
                         std::span<const double> covariate);

// Contribution of term `term` at the given factor levels (covariate = 1).
double TermValue(const ModelSpec& spec, const ParameterLayout& layout, int term,
                 std::span<const int> levels, std::span<const double> theta);

// phi for one record of `ds` under `params`. Throws kShapeMismatch when the
// parameter vector was not laid out for this spec and dataset.
double LinearPredictor(const ModelSpec& spec, const Dataset& ds,
                       std::size_t record, const ParameterVector& params);

}  // namespace grader_audit

#endif  // GRADER_AUDIT_DESIGN_HPP_
