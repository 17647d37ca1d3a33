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

#include "grader_audit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "grader_audit/analysis.hpp"
#include "grader_audit/error.hpp"
#include "grader_audit/likelihoods.hpp"
#include "grader_audit/random.hpp"

namespace grader_audit {

namespace {

// Prior-mean spacing: c_1 = -4, gaps exp(-0.5) + 0.3.
std::vector<double> DefaultCutpoints(int k) {
  std::vector<double> c;
  for (int j = 0; j < k - 1; ++j) c.push_back(-4.0 + j * (std::exp(-0.5) + 0.3));
  return c;
}

// Reference cutpoint table. Its first entry bounds an unused zero category,
// so a 10-point scale uses the remaining nine.
const std::vector<double> kCalibrationTable = {
    -4.07, -3.25, -2.39, -1.28, -0.20, 1.29, 3.11, 4.71, 5.60, 6.22};

std::vector<std::string> Numbered(const std::string& prefix, int n) {
  std::vector<std::string> out;
  char buf[32];
  for (int i = 1; i <= n; ++i) {
    std::snprintf(buf, sizeof(buf), "%03d", i);
    out.push_back(prefix + buf);
  }
  return out;
}

int SampleOrdered(double phi, const std::vector<double>& cuts, Rng& rng) {
  const double u = rng.Uniform();
  for (std::size_t j = 0; j < cuts.size(); ++j) {
    if (u < InvLogit(cuts[j] - phi)) return static_cast<int>(j) + 1;
  }
  return static_cast<int>(cuts.size()) + 1;
}

double MeanOf(const std::map<std::string, double>& m) {
  if (m.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [k, v] : m) s += v;
  return s / static_cast<double>(m.size());
}

double Lookup(const std::map<std::string, double>& m, const std::string& k) {
  const auto it = m.find(k);
  return it == m.end() ? 0.0 : it->second;
}

double RowMean(const Truth::Interaction& in, const std::string& a) {
  const auto it = in.values.find(a);
  return it == in.values.end() ? 0.0 : MeanOf(it->second);
}

double ColMean(const Truth::Interaction& in, const std::string& b) {
  if (in.values.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [a, row] : in.values) s += Lookup(row, b);
  return s / static_cast<double>(in.values.size());
}

double GrandMean(const Truth::Interaction& in) {
  if (in.values.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [a, row] : in.values) s += MeanOf(row);
  return s / static_cast<double>(in.values.size());
}

ScenarioConfig ScoresBase(std::string name, std::vector<Preset> presets,
                          std::uint64_t seed) {
  ScenarioConfig c;
  c.name = std::move(name);
  c.presets = std::move(presets);
  c.kind = DatasetKind::kScores;
  c.seed = seed;
  c.truth.cutpoints = DefaultCutpoints(10);
  return c;
}

}  // namespace

double Truth::Phi(const std::map<std::string, std::string>& levels) const {
  double phi = intercept;
  for (const auto& [factor, effects] : main) {
    const auto it = levels.find(factor);
    if (it != levels.end()) phi += Lookup(effects, it->second);
  }
  for (const auto& in : interactions) {
    const auto a = levels.find(in.first);
    const auto b = levels.find(in.second);
    if (a == levels.end() || b == levels.end()) continue;
    const auto row = in.values.find(a->second);
    if (row != in.values.end()) phi += Lookup(row->second, b->second);
  }
  return phi;
}

void ScenarioConfig::Validate() const {
  const auto bad = [](const std::string& why) {
    throw Error(ErrorKind::kInvalidTruthShape, why);
  };
  if (kind == DatasetKind::kScores) {
    if (truth.cutpoints.empty()) bad("scores scenarios need cutpoints");
    for (std::size_t j = 1; j < truth.cutpoints.size(); ++j) {
      if (!(truth.cutpoints[j] > truth.cutpoints[j - 1])) {
        bad("true cutpoints must be strictly increasing");
      }
    }
    if (graders.empty() || llms.empty() || items.empty()) {
      bad("scores scenarios need graders, llms and items");
    }
    if (repeats < 1) bad("repeats must be >= 1");
  } else {
    if (llms.size() < 2) bad("pairwise scenarios need at least 2 llms");
    if (graders.empty()) bad("pairwise scenarios need graders");
    if (comparisons_per_pair < 1) bad("comparisons_per_pair must be >= 1");
    for (const auto& l : llms) {
      if (!token_meanlog.count(l)) bad("no token length location for llm '" + l + "'");
    }
    if (!(token_sdlog > 0.0)) bad("token_sdlog must be positive");
  }
}

std::vector<std::string> ScenarioNames() {
  return {"q1_1", "q1_1_null", "q1_2", "q2", "q3", "q4", "q5", "q5_no_length",
          "calibration"};
}

ScenarioConfig DefaultScenario(std::string_view name, std::uint64_t seed) {
  const std::pair<std::string, GraderType> autog{"autograder", GraderType::kAutograder};
  const std::pair<std::string, GraderType> human{"human", GraderType::kHuman};
  if (name == "q1_1" || name == "q1_1_null") {
    const bool null = name == "q1_1_null";
    auto c = ScoresBase(std::string(name), {Preset::kQ1_1, Preset::kQ1_1Null}, seed);
    c.graders = {autog, human};
    c.llms = {"A"};
    c.items = Numbered("item_", 100);
    c.truth.intercept = -0.4;
    const double b1 = null ? 0.0 : -0.6;
    c.truth.main["grader"] = {{"autograder", b1}, {"human", -b1}};
    return c;
  }
  if (name == "q1_2") {
    auto c = ScoresBase("q1_2", {Preset::kQ1_2}, seed);
    c.graders = {autog, human};
    c.llms = {"A", "B"};
    c.items = Numbered("item_", 50);
    c.truth.intercept = -0.2;
    c.truth.main["grader"] = {{"autograder", -0.5}, {"human", 0.5}};
    c.truth.main["llm"] = {{"A", 0.6}, {"B", -0.6}};
    return c;
  }
  if (name == "q2") {
    auto c = ScoresBase("q2", {Preset::kQ2}, seed);
    c.graders = {human, {"autograder_A", GraderType::kAutograder},
                 {"autograder_B", GraderType::kAutograder}};
    c.llms = {"A", "B"};
    c.items = Numbered("item_", 50);
    c.truth.main["grader"] = {{"human", 0.5}, {"autograder_A", -0.2}, {"autograder_B", -0.3}};
    c.truth.main["llm"] = {{"A", 0.4}, {"B", -0.4}};
    Truth::Interaction in{"grader", "llm", {}};
    in.values["human"] = {{"A", 0.0}, {"B", 0.0}};
    in.values["autograder_A"] = {{"A", 0.4}, {"B", -0.4}};
    in.values["autograder_B"] = {{"A", -0.4}, {"B", 0.4}};
    c.truth.interactions.push_back(std::move(in));
    return c;
  }
  if (name == "q3" || name == "q4") {
    const bool q4 = name == "q4";
    auto c = ScoresBase(std::string(name),
                        q4 ? std::vector<Preset>{Preset::kQ4}
                           : std::vector<Preset>{Preset::kQ3Flat, Preset::kQ3Hier},
                        seed);
    c.graders = {{"human_X", GraderType::kHuman},
                 {"human_Y", GraderType::kHuman},
                 {"human_Z", GraderType::kHuman},
                 {"autograder_A", GraderType::kAutograder},
                 {"autograder_B", GraderType::kAutograder},
                 {"autograder_C", GraderType::kAutograder}};
    c.llms = {"A", "B"};
    if (q4) {
      // Strong grader main effects, no grader x item interaction.
      c.truth.main["grader"] = {{"human_X", 2.0},       {"human_Y", 1.6},
                                {"human_Z", 2.4},       {"autograder_A", -2.0},
                                {"autograder_B", -2.4}, {"autograder_C", -1.6}};
      c.truth.main["llm"] = {{"A", 0.3}, {"B", -0.3}};
      c.items = {"item_1", "item_2", "item_3", "item_4"};
      c.truth.main["item"] = {{"item_1", 2.0}, {"item_2", 0.5}, {"item_3", -0.7},
                              {"item_4", -1.8}};
      c.repeats = 25;
    } else {
      c.truth.main["grader"] = {{"human_X", 0.7},       {"human_Y", 0.5},
                                {"human_Z", 0.8},       {"autograder_A", -0.6},
                                {"autograder_B", -0.9}, {"autograder_C", -0.5}};
      c.truth.main["llm"] = {{"A", 0.4}, {"B", -0.4}};
      c.items = Numbered("item_", 50);
    }
    return c;
  }
  if (name == "q5" || name == "q5_no_length") {
    const bool length = name == "q5";
    ScenarioConfig c;
    c.name = std::string(name);
    c.presets = {Preset::kQ5, Preset::kQ5NoLength};
    c.kind = DatasetKind::kPairwise;
    c.seed = seed;
    c.graders = {autog, human};
    c.llms = {"A", "B", "C"};
    c.comparisons_per_pair = 100;
    c.token_meanlog = {{"A", std::log(300.0)}, {"B", std::log(250.0)},
                       {"C", std::log(200.0)}};
    c.truth.intercept = 0.6;
    c.truth.main["pair"] = {{"A_vs_B", -0.2}, {"A_vs_C", 0.4}, {"B_vs_C", -0.2}};
    c.truth.main["grader"] = {{"autograder", 0.1}, {"human", -0.1}};
    c.truth.length_bias = {{"autograder", length ? 0.8 : 0.0},
                           {"human", length ? 0.3 : 0.0}};
    return c;
  }
  if (name == "calibration") {
    // Spread-out LLM qualities so every category is well populated.
    auto c = ScoresBase("calibration", {Preset::kQ1_2}, seed);
    c.truth.cutpoints.assign(kCalibrationTable.begin() + 1, kCalibrationTable.end());
    c.graders = {autog, human};
    c.llms = {"L1", "L2", "L3", "L4", "L5"};
    c.items = Numbered("item_", 600);
    c.truth.main["grader"] = {{"autograder", -0.3}, {"human", 0.3}};
    c.truth.main["llm"] = {{"L1", -3.5}, {"L2", -1.5}, {"L3", 0.5}, {"L4", 1.5}, {"L5", 3.0}};
    return c;
  }
  std::string valid;
  for (const auto& n : ScenarioNames()) valid += (valid.empty() ? "" : ", ") + n;
  throw Error(ErrorKind::kUnknownScenario,
              "unknown scenario '" + std::string(name) + "' (valid: " + valid + ")");
}

SimulationResult SimulateScores(const ScenarioConfig& cfg) {
  cfg.Validate();
  if (cfg.kind != DatasetKind::kScores) {
    throw Error(ErrorKind::kInvalidTruthShape, "not a scores scenario");
  }
  Rng rng(cfg.seed);
  DatasetBuilder builder(DatasetKind::kScores);
  std::size_t row = 0;
  for (const auto& item : cfg.items) {
    for (const auto& llm : cfg.llms) {
      for (int r = 0; r < cfg.repeats; ++r) {
        for (const auto& [grader, type] : cfg.graders) {
          const double phi = cfg.truth.Phi({{"grader", grader}, {"llm", llm}, {"item", item}});
          const int score = SampleOrdered(phi, cfg.truth.cutpoints, rng);
          builder.AddScore(grader, type, llm, item, score, ++row);
        }
      }
    }
  }
  return {std::move(builder).Build(cfg.n_categories()), cfg};
}

SimulationResult SimulatePairwise(const ScenarioConfig& cfg) {
  cfg.Validate();
  if (cfg.kind != DatasetKind::kPairwise) {
    throw Error(ErrorKind::kInvalidTruthShape, "not a pairwise scenario");
  }
  Rng rng(cfg.seed);
  struct Pending {
    std::string grader, first, second, item, pair;
    std::int64_t tokens_first, tokens_second;
    bool reversed;
  };
  std::vector<Pending> pending;
  const auto prompts = Numbered("prompt_", cfg.comparisons_per_pair);
  std::vector<std::string> llms = cfg.llms;
  std::sort(llms.begin(), llms.end());
  for (const auto& [grader, type] : cfg.graders) {
    for (std::size_t a = 0; a < llms.size(); ++a) {
      for (std::size_t b = a + 1; b < llms.size(); ++b) {
        for (const auto& prompt : prompts) {
          const auto tokens = [&](const std::string& llm) {
            const double t = rng.LogNormal(cfg.token_meanlog.at(llm), cfg.token_sdlog);
            return std::max<std::int64_t>(1, std::llround(t));
          };
          const std::int64_t ta = tokens(llms[a]);
          const std::int64_t tb = tokens(llms[b]);
          const bool reversed = rng.Bernoulli(0.5);
          Pending p{grader, reversed ? llms[b] : llms[a], reversed ? llms[a] : llms[b],
                    prompt, llms[a] + "_vs_" + llms[b], reversed ? tb : ta,
                    reversed ? ta : tb, reversed};
          pending.push_back(std::move(p));
        }
      }
    }
  }
  const auto build = [&](const std::vector<bool>& chose_first) {
    DatasetBuilder builder(DatasetKind::kPairwise);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const auto& p = pending[i];
      builder.AddPairwise(p.grader, p.first, p.second, p.item, p.tokens_first,
                          p.tokens_second, chose_first[i], i + 1);
    }
    return std::move(builder).Build();
  };
  // The slope acts on the same standardized, canonically oriented covariate
  // the model sees, so build once with placeholder choices to compute it.
  const Dataset placeholder = build(std::vector<bool>(pending.size(), false));
  const auto z = OrientedLengthDiff(placeholder);
  std::vector<bool> chose(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const auto& p = pending[i];
    const double eta = cfg.truth.Phi({{"grader", p.grader}, {"pair", p.pair}}) +
                       Lookup(cfg.truth.length_bias, p.grader) * z[i];
    const bool canonical_first_wins = rng.Bernoulli(InvLogit(eta));
    chose[i] = canonical_first_wins != p.reversed;
  }
  return {build(chose), cfg};
}

SimulationResult Simulate(const ScenarioConfig& cfg) {
  return cfg.kind == DatasetKind::kScores ? SimulateScores(cfg) : SimulatePairwise(cfg);
}

std::map<std::string, double> IdentifiedTruth(const ScenarioConfig& cfg,
                                              const Model& model) {
  const Truth& t = cfg.truth;
  std::map<std::string, double> out;
  for (const auto& name : IdentifiedNames(model)) {
    if (name == "grand_mean") {
      double v = t.intercept;
      for (const auto& [f, effects] : t.main) v += MeanOf(effects);
      for (const auto& in : t.interactions) v += GrandMean(in);
      out[name] = v;
      continue;
    }
    const auto open = name.find('[');
    const std::string inside = name.substr(open + 1, name.size() - open - 2);
    const std::string head = name.substr(0, open);
    if (head.rfind("marginal:", 0) == 0) {
      const std::string f = head.substr(9);
      double v = 0.0;
      const auto it = t.main.find(f);
      if (it != t.main.end()) v += Lookup(it->second, inside) - MeanOf(it->second);
      for (const auto& in : t.interactions) {
        if (in.first == f) v += RowMean(in, inside) - GrandMean(in);
        if (in.second == f) v += ColMean(in, inside) - GrandMean(in);
      }
      out[name] = v;
    } else if (head.rfind("interaction:", 0) == 0) {
      const std::string factors = head.substr(12);
      const auto colon = factors.find(':');
      const std::string f1 = factors.substr(0, colon), f2 = factors.substr(colon + 1);
      const auto comma = inside.find(',');
      const std::string a = inside.substr(0, comma), b = inside.substr(comma + 1);
      double v = 0.0;
      for (const auto& in : t.interactions) {
        if (in.first != f1 || in.second != f2) continue;
        const auto row = in.values.find(a);
        const double cell = row == in.values.end() ? 0.0 : Lookup(row->second, b);
        v += cell - RowMean(in, a) - ColMean(in, b) + GrandMean(in);
      }
      out[name] = v;
    } else if (head.rfind("slope:", 0) == 0) {
      out[name] = Lookup(t.length_bias, inside);
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const Truth& t) {
  j = nlohmann::json{{"intercept", t.intercept}, {"effects", t.main}};
  nlohmann::json ins = nlohmann::json::array();
  for (const auto& in : t.interactions) {
    ins.push_back({{"factors", {in.first, in.second}}, {"values", in.values}});
  }
  j["interactions"] = std::move(ins);
  if (!t.length_bias.empty()) j["length_bias"] = t.length_bias;
  if (!t.cutpoints.empty()) j["cutpoints"] = t.cutpoints;
}

void to_json(nlohmann::json& j, const ScenarioConfig& cfg) {
  std::vector<std::string> presets;
  for (const auto p : cfg.presets) presets.emplace_back(ToString(p));
  j = nlohmann::json{{"scenario", cfg.name},
                     {"presets", presets},
                     {"seed", cfg.seed},
                     {"truth", cfg.truth}};
  if (cfg.kind == DatasetKind::kScores) {
    j["n_categories"] = cfg.n_categories();
    j["design"] = {{"graders", cfg.graders.size()},
                   {"llms", cfg.llms},
                   {"items", cfg.items.size()},
                   {"repeats", cfg.repeats}};
  } else {
    j["design"] = {{"graders", cfg.graders.size()},
                   {"llms", cfg.llms},
                   {"comparisons_per_pair", cfg.comparisons_per_pair},
                   {"token_meanlog", cfg.token_meanlog},
                   {"token_sdlog", cfg.token_sdlog}};
  }
}

}  // namespace grader_audit
