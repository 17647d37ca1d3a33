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

#ifndef GRADER_AUDIT_ANALYSIS_HPP_
#define GRADER_AUDIT_ANALYSIS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "grader_audit/data_model.hpp"
#include "grader_audit/design.hpp"
#include "grader_audit/inference.hpp"
#include "grader_audit/random.hpp"

namespace grader_audit {

struct Summary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;   // 2.5% quantile
  double ci_high = 0.0;  // 97.5% quantile
};

// Equal-tailed 95% interval from linearly interpolated empirical quantiles.
// Throws kTooFewDraws below 4 samples.
Summary Summarize(std::string name, std::span<const double> samples);
std::vector<Summary> Summarize(const PosteriorDraws& draws, std::string_view block);
std::vector<Summary> SummarizeAll(const PosteriorDraws& draws);
// Linear-interpolation quantile of unsorted data.
double Quantile(std::vector<double> x, double p);

struct ContrastSpec {
  std::string name;
  std::vector<std::pair<std::string, double>> weights;
};

struct ContrastResult {
  Summary summary;
  std::vector<double> samples;
  double fraction_below_zero = 0.0;
  double fraction_above_zero = 0.0;
};

// Per-draw weighted sum of named columns. Throws kUnknownParameter.
ContrastResult Contrast(const PosteriorDraws& draws, const ContrastSpec& cs);

enum class RopeVerdict { kPracticallyEquivalent, kNotEquivalent, kUndecided };
std::string_view ToString(RopeVerdict verdict);

inline constexpr double kRopeLow = -0.18;
inline constexpr double kRopeHigh = 0.18;

struct RopeResult {
  double low = kRopeLow;
  double high = kRopeHigh;
  double fraction_inside = 0.0;
  RopeVerdict verdict = RopeVerdict::kUndecided;
};

// Verdict from the 95% interval: inside the ROPE entirely, disjoint from it,
// or neither. Throws kEmptySamples and kInvalidConfig (low >= high).
RopeResult RopeCheck(std::span<const double> samples, double low = kRopeLow,
                     double high = kRopeHigh);

enum class PredictMode { kFull, kRemoveGraderMain };
std::string_view ToString(PredictMode mode);

// One simulated outcome per record of the model's dataset under constrained
// theta: a score 1..K or a canonical-orientation choice 1/0.
std::vector<int> PredictOutcomes(const Model& model, std::span<const double> theta,
                                 PredictMode mode, Rng& rng);

// Replicates for `rows` (records labelled like the fitted data) under every
// draw in `draw_indices`; draw d uses stream (seed, d). Throws kUnknownLevel
// for labels the fit never saw and kShapeMismatch for foreign draws.
std::vector<std::vector<int>> PosteriorPredict(
    const ModelSpec& spec, const Dataset& fitted, const PosteriorDraws& draws,
    const Dataset& rows, PredictMode mode, const std::vector<int>& draw_indices,
    std::uint64_t seed);

// M indices spread evenly over the draws (all of them when M >= total).
std::vector<int> ThinnedDrawIndices(int total, int m);

enum class AlphaMetric { kOrdinal, kInterval };
std::string_view ToString(AlphaMetric metric);
std::optional<AlphaMetric> ParseAlphaMetric(std::string_view text);

// units x raters; nullopt marks a missing rating.
using RatingTable = std::vector<std::vector<std::optional<int>>>;

// Krippendorff's alpha from the coincidence matrix of pairable values.
// Throws kTooFewRatings when no unit has two ratings and kNoVariation when
// the expected disagreement is zero.
double KrippendorffAlpha(const RatingTable& table, AlphaMetric metric);

// Units are (item, llm, k-th rating of that pair by a grader); raters are
// graders. `scores` overrides the dataset's scores (replicates).
RatingTable AgreementTable(const Dataset& ds,
                           std::span<const int> scores = {});

struct AlphaSample {
  PredictMode mode = PredictMode::kFull;
  std::vector<double> samples;
  Summary summary;
};

struct AgreementReport {
  AlphaMetric metric = AlphaMetric::kOrdinal;
  double alpha_observed = 0.0;
  AlphaSample posterior;
  AlphaSample counterfactual;
};

inline constexpr int kDefaultAlphaReps = 500;

// Alpha of posterior-predictive replicates for `reps` thinned draws.
// Throws kMissingItemColumn when records lack items.
AlphaSample AlphaPosterior(const Model& model, const Dataset& ds,
                           const PosteriorDraws& draws, PredictMode mode,
                           AlphaMetric metric, int reps, std::uint64_t seed);
AgreementReport Agreement(const ModelSpec& spec, const Dataset& ds,
                          const PosteriorDraws& draws, AlphaMetric metric,
                          int reps = kDefaultAlphaReps, std::uint64_t seed = 0);

enum class IntervalClass { kNarrow, kModerate, kWide };
std::string_view ToString(IntervalClass c);
// Narrow below 1.0, Moderate in [1.0, 1.4), Wide from 1.4.
IntervalClass ClassifyInterval(double size);

struct CutpointEntry {
  int index = 0;  // j of c_j, 1-based
  double value = 0.0;
  // Distance to c_{j-1}; absent for the first cutpoint.
  std::optional<double> interval;
  std::optional<IntervalClass> classification;
};

struct CalibrationReport {
  std::vector<CutpointEntry> cutpoints;
};

CalibrationReport CalibrationFromCutpoints(std::span<const double> means);
// Posterior-mean cutpoints of the draws. Throws kNotOrderedModel.
CalibrationReport CutpointReport(const PosteriorDraws& draws);

// P(a beats b) for one unordered pair.
struct Preference {
  std::string a;
  std::string b;
  double p_a_beats_b = 0.5;
};

// True when the majority-preference digraph has a directed cycle.
bool HasPreferenceCycle(const std::vector<Preference>& prefs);
// Models ordered by majority wins (ties by name).
std::vector<std::string> MajorityOrder(const std::vector<Preference>& prefs);

struct PairProbability {
  std::string pair;
  std::string first;
  std::string second;
  Summary p_first;  // P(first beats second)
};

struct TransitivityReport {
  std::vector<PairProbability> pairs;
  bool cycle = false;
  double cycle_frequency = 0.0;
  std::vector<std::string> ordering;
};

// Preference probabilities at zero length difference with grader effects
// averaged over graders. Throws kTooFewModels.
TransitivityReport TransitivityCheck(const Model& model, const PosteriorDraws& draws);

// Identified quantities of a model: level effects centred over the design
// grid ("marginal:<factor>[level]"), double-centred two-factor interactions
// ("interaction:<f1>:<f2>[a,b]"), covariate slopes ("slope:<term>[level]")
// and, for choice models, the grand-mean linear predictor ("grand_mean").
std::vector<std::string> IdentifiedNames(const Model& model);
std::vector<double> IdentifiedValues(const Model& model, std::span<const double> theta);
// The draws with one extra column per identified quantity.
PosteriorDraws WithIdentified(const Model& model, const PosteriorDraws& draws);

// Contrasts over WithIdentified draws: autograder_minus_human,
// llm:<a>_minus_<b> and self_bias:<grader>:<a>_minus_<b>.
std::vector<ContrastSpec> StandardContrasts(const Model& model, const Dataset& ds);

void to_json(nlohmann::json& j, const Summary& s);
void to_json(nlohmann::json& j, const ContrastResult& c);
void to_json(nlohmann::json& j, const RopeResult& r);
void to_json(nlohmann::json& j, const AgreementReport& r);
void to_json(nlohmann::json& j, const CalibrationReport& r);
void to_json(nlohmann::json& j, const TransitivityReport& r);

}  // namespace grader_audit

#endif  // GRADER_AUDIT_ANALYSIS_HPP_
