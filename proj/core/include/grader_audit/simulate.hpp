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

#ifndef GRADER_AUDIT_SIMULATE_HPP_
#define GRADER_AUDIT_SIMULATE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "grader_audit/data_model.hpp"
#include "grader_audit/design.hpp"

namespace grader_audit {

// Ground truth on the latent scale. Main effects are per level and should
// sum to zero within a factor; anything else shifts into the grand mean.
struct Truth {
  double intercept = 0.0;
  // factor -> level -> effect
  std::map<std::string, std::map<std::string, double>> main;
  struct Interaction {
    std::string first;
    std::string second;
    std::map<std::string, std::map<std::string, double>> values;
  };
  std::vector<Interaction> interactions;
  // Pairwise only: grader -> slope on the standardized length difference.
  std::map<std::string, double> length_bias;
  // Ordered only: K - 1 strictly increasing values.
  std::vector<double> cutpoints;

  // Latent predictor for one combination of levels (missing -> 0).
  double Phi(const std::map<std::string, std::string>& levels) const;
};

struct ScenarioConfig {
  std::string name;
  // Preset(s) the scenario is meant for.
  std::vector<Preset> presets;
  DatasetKind kind = DatasetKind::kScores;
  Truth truth;
  std::uint64_t seed = 0;

  // Scores: every grader scores every (item, llm, repeat) response.
  std::vector<std::pair<std::string, GraderType>> graders;
  std::vector<std::string> llms;
  std::vector<std::string> items;
  int repeats = 1;

  // Pairwise: each grader sees each unordered pair this many times, on
  // prompts "prompt_001"...; the listing order is a fair coin.
  int comparisons_per_pair = 0;
  // Per-LLM LogNormal token counts.
  std::map<std::string, double> token_meanlog;
  double token_sdlog = 0.4;

  int n_categories() const { return static_cast<int>(truth.cutpoints.size()) + 1; }
  // Throws kInvalidTruthShape.
  void Validate() const;
};

std::vector<std::string> ScenarioNames();
// Throws kUnknownScenario naming the valid scenarios.
ScenarioConfig DefaultScenario(std::string_view name, std::uint64_t seed);

struct SimulationResult {
  Dataset data;
  ScenarioConfig config;
};

SimulationResult SimulateScores(const ScenarioConfig& cfg);
SimulationResult SimulatePairwise(const ScenarioConfig& cfg);
SimulationResult Simulate(const ScenarioConfig& cfg);

// Truth values of the model's identified quantities (see IdentifiedNames),
// keyed by the same names.
std::map<std::string, double> IdentifiedTruth(const ScenarioConfig& cfg,
                                              const Model& model);

void to_json(nlohmann::json& j, const Truth& t);
void to_json(nlohmann::json& j, const ScenarioConfig& cfg);

}  // namespace grader_audit

#endif  // GRADER_AUDIT_SIMULATE_HPP_
