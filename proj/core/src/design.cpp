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

#include "grader_audit/design.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "grader_audit/error.hpp"

namespace grader_audit {

namespace {

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

Term Main(std::string name, CodingScheme coding = CodingScheme::kEffect) {
  Term t;
  t.factors = {name};
  t.name = std::move(name);
  t.coding = coding;
  return t;
}

Term Interaction(std::string name, std::string a, std::string b) {
  Term t;
  t.name = std::move(name);
  t.factors = {std::move(a), std::move(b)};
  t.coding = CodingScheme::kIndex;
  return t;
}

std::string_view ToString(PriorFamily family) {
  switch (family) {
    case PriorFamily::kNormal: return "Normal";
    case PriorFamily::kHalfNormal: return "HalfNormal";
    case PriorFamily::kHalfCauchy: return "HalfCauchy";
    case PriorFamily::kLogNormal: return "LogNormal";
  }
  return "Normal";
}

PriorFamily ParsePriorFamily(const std::string& text) {
  for (const auto f : {PriorFamily::kNormal, PriorFamily::kHalfNormal,
                       PriorFamily::kHalfCauchy, PriorFamily::kLogNormal}) {
    if (text == ToString(f)) return f;
  }
  throw Error(ErrorKind::kInvalidSpec, "unknown prior family '" + text + "'");
}

Likelihood ParseLikelihood(const std::string& text) {
  if (text == "OrderedLogistic") return Likelihood::kOrderedLogistic;
  if (text == "BernoulliLogit") return Likelihood::kBernoulliLogit;
  throw Error(ErrorKind::kInvalidSpec, "unknown likelihood '" + text + "'");
}

CodingScheme ParseCoding(const std::string& text) {
  if (text == "EffectCoded") return CodingScheme::kEffect;
  if (text == "IndexCoded") return CodingScheme::kIndex;
  if (text == "DummyCoded") return CodingScheme::kDummy;
  throw Error(ErrorKind::kInvalidSpec, "unknown coding '" + text + "'");
}

std::vector<std::string> CoefficientLabels(const Term& term,
                                           const std::vector<int>& levels,
                                           const Dataset& ds) {
  std::vector<std::vector<std::string>> per_factor;
  for (std::size_t f = 0; f < term.factors.size(); ++f) {
    per_factor.push_back(ds.factor(term.factors[f]).levels());
  }
  std::vector<std::string> labels;
  if (term.factors.size() == 1) {
    const auto& lv = per_factor[0];
    switch (term.coding) {
      case CodingScheme::kEffect:
        labels.assign(lv.begin(), lv.end() - 1);
        break;
      case CodingScheme::kIndex:
        labels = lv;
        break;
      case CodingScheme::kDummy:
        labels.assign(lv.begin() + 1, lv.end());
        break;
    }
  } else {
    const int la = levels[0];
    const int lb = levels[1];
    const bool effect = term.coding == CodingScheme::kEffect;
    for (int a = 0; a < (effect ? la - 1 : la); ++a) {
      for (int b = 0; b < (effect ? lb - 1 : lb); ++b) {
        if (term.coding == CodingScheme::kDummy && a == 0 && b == 0) continue;
        labels.push_back(per_factor[0][static_cast<std::size_t>(a)] + "," +
                         per_factor[1][static_cast<std::size_t>(b)]);
      }
    }
  }
  for (auto& l : labels) l = term.name + "[" + l + "]";
  return labels;
}

void Append(DesignRow& row, int index, double weight, int term) {
  row.index.push_back(index);
  row.weight.push_back(weight);
  row.term.push_back(term);
}

}  // namespace

const Term* ModelSpec::FindTerm(std::string_view term_name) const {
  for (const auto& t : terms) {
    if (t.name == term_name) return &t;
  }
  return nullptr;
}

void ModelSpec::Validate() const {
  std::set<std::string> seen;
  for (const auto& t : terms) {
    if (t.name.empty()) {
      throw Error(ErrorKind::kInvalidSpec, "term with empty name");
    }
    if (!seen.insert(t.name).second) {
      throw Error(ErrorKind::kInvalidSpec, "duplicate term '" + t.name + "'");
    }
    if (t.factors.empty() || t.factors.size() > 2) {
      throw Error(ErrorKind::kInvalidSpec,
                  "term '" + t.name + "' must reference 1 or 2 factors");
    }
    if (t.hierarchical() &&
        (t.factors.size() != 1 || t.coding != CodingScheme::kIndex)) {
      throw Error(ErrorKind::kInvalidSpec,
                  "hierarchical term '" + t.name +
                      "' must be a one-factor IndexCoded term");
    }
  }
  if (ordered() && n_categories != 0 && n_categories < 2) {
    throw Error(ErrorKind::kInvalidSpec, "ordered models need K >= 2");
  }
  if (fixed_cutpoints) {
    if (!ordered()) {
      throw Error(ErrorKind::kInvalidSpec,
                  "fixed cutpoints given for a Bernoulli model");
    }
    for (std::size_t j = 1; j < fixed_cutpoints->size(); ++j) {
      if (!((*fixed_cutpoints)[j] > (*fixed_cutpoints)[j - 1])) {
        throw Error(ErrorKind::kInvalidSpec,
                    "fixed cutpoints must be strictly increasing");
      }
    }
  }
}

std::string_view ToString(Preset preset) {
  switch (preset) {
    case Preset::kQ1_1: return "q1_1";
    case Preset::kQ1_1Null: return "q1_1_null";
    case Preset::kQ1_2: return "q1_2";
    case Preset::kQ2: return "q2";
    case Preset::kQ3Flat: return "q3_flat";
    case Preset::kQ3Hier: return "q3_hier";
    case Preset::kQ4: return "q4";
    case Preset::kQ5: return "q5";
    case Preset::kQ5NoLength: return "q5_no_length";
  }
  return "q1_1";
}

std::optional<Preset> ParsePreset(std::string_view text) {
  const std::string lower = Lower(text);
  for (const Preset p : kAllPresets) {
    if (lower == ToString(p)) return p;
  }
  return std::nullopt;
}

bool IsPairwisePreset(Preset preset) {
  return preset == Preset::kQ5 || preset == Preset::kQ5NoLength;
}

ModelSpec MakePreset(Preset preset, int n_categories) {
  ModelSpec spec;
  spec.name = std::string(ToString(preset));
  if (IsPairwisePreset(preset)) {
    spec.likelihood = Likelihood::kBernoulliLogit;
  } else {
    spec.likelihood = Likelihood::kOrderedLogistic;
    spec.n_categories = n_categories;
  }
  const std::string grader(kGraderFactor);
  const std::string llm(kLlmFactor);
  const std::string item(kItemFactor);
  switch (preset) {
    case Preset::kQ1_1Null:
      break;
    case Preset::kQ1_1:
      spec.terms = {Main(grader)};
      break;
    case Preset::kQ1_2:
    case Preset::kQ3Flat:
      spec.terms = {Main(grader), Main(llm)};
      break;
    case Preset::kQ2:
      spec.terms = {Main(grader), Main(llm),
                    Interaction("grader_llm", grader, llm)};
      break;
    case Preset::kQ3Hier: {
      Term g = Main(grader, CodingScheme::kIndex);
      g.group = std::string(kGraderTypeFactor);
      g.hyper_mean_prior = {PriorFamily::kNormal, 0.0, 3.0};
      g.hyper_scale_prior = {PriorFamily::kHalfCauchy, 0.0, 1.0};
      spec.terms = {g, Main(llm)};
      break;
    }
    case Preset::kQ4:
      spec.terms = {Main(grader), Main(llm), Main(item),
                    Interaction("grader_item", grader, item)};
      break;
    case Preset::kQ5NoLength:
      spec.terms = {Main(std::string(kPairFactor)), Main(grader)};
      break;
    case Preset::kQ5: {
      Term slope = Main(grader, CodingScheme::kIndex);
      slope.name = "length_bias";
      slope.covariate = std::string(kLengthDiffCovariate);
      slope.group = std::string(kPooledGroup);
      slope.hyper_mean_prior = {PriorFamily::kNormal, 0.0, 0.5};
      slope.hyper_scale_prior = {PriorFamily::kHalfNormal, 0.0, 1.0};
      spec.terms = {Main(std::string(kPairFactor)), Main(grader), slope};
      break;
    }
  }
  return spec;
}

std::string_view ToString(Likelihood likelihood) {
  return likelihood == Likelihood::kOrderedLogistic ? "OrderedLogistic"
                                                    : "BernoulliLogit";
}

std::string_view ToString(CodingScheme coding) {
  switch (coding) {
    case CodingScheme::kEffect: return "EffectCoded";
    case CodingScheme::kIndex: return "IndexCoded";
    case CodingScheme::kDummy: return "DummyCoded";
  }
  return "EffectCoded";
}

void to_json(nlohmann::json& j, const Prior& prior) {
  j = nlohmann::json{{"family", ToString(prior.family)},
                     {"location", prior.location},
                     {"scale", prior.scale}};
}

void from_json(const nlohmann::json& j, Prior& prior) {
  prior.family = ParsePriorFamily(j.at("family").get<std::string>());
  prior.location = j.value("location", 0.0);
  prior.scale = j.at("scale").get<double>();
}

void to_json(nlohmann::json& j, const Term& term) {
  j = nlohmann::json{{"name", term.name},
                     {"factors", term.factors},
                     {"coding", ToString(term.coding)},
                     {"prior", term.prior}};
  if (term.covariate) j["covariate"] = *term.covariate;
  if (term.group) {
    j["group"] = *term.group;
    j["hyper_mean_prior"] = term.hyper_mean_prior;
    j["hyper_scale_prior"] = term.hyper_scale_prior;
  }
}

void from_json(const nlohmann::json& j, Term& term) {
  term = Term{};
  term.name = j.at("name").get<std::string>();
  term.factors = j.at("factors").get<std::vector<std::string>>();
  term.coding = ParseCoding(j.value("coding", std::string("EffectCoded")));
  if (j.contains("prior")) term.prior = j.at("prior").get<Prior>();
  if (j.contains("covariate")) {
    term.covariate = j.at("covariate").get<std::string>();
  }
  if (j.contains("group")) {
    term.group = j.at("group").get<std::string>();
    if (j.contains("hyper_mean_prior")) {
      term.hyper_mean_prior = j.at("hyper_mean_prior").get<Prior>();
    }
    if (j.contains("hyper_scale_prior")) {
      term.hyper_scale_prior = j.at("hyper_scale_prior").get<Prior>();
    }
  }
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
  j = nlohmann::json{{"name", spec.name},
                     {"likelihood", ToString(spec.likelihood)},
                     {"intercept_prior", spec.intercept_prior},
                     {"terms", spec.terms}};
  if (spec.ordered()) {
    j["n_categories"] = spec.n_categories;
    j["cutpoint_prior"] = {{"first", spec.cutpoint_prior.first},
                           {"difference", spec.cutpoint_prior.difference},
                           {"shift", spec.cutpoint_prior.shift}};
    if (spec.fixed_cutpoints) j["fixed_cutpoints"] = *spec.fixed_cutpoints;
  }
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
  spec = ModelSpec{};
  spec.name = j.value("name", std::string("custom"));
  spec.likelihood = ParseLikelihood(j.at("likelihood").get<std::string>());
  spec.n_categories = j.value("n_categories", 0);
  if (j.contains("intercept_prior")) {
    spec.intercept_prior = j.at("intercept_prior").get<Prior>();
  }
  if (j.contains("cutpoint_prior")) {
    const auto& cp = j.at("cutpoint_prior");
    if (cp.contains("first")) spec.cutpoint_prior.first = cp.at("first");
    if (cp.contains("difference")) {
      spec.cutpoint_prior.difference = cp.at("difference");
    }
    spec.cutpoint_prior.shift = cp.value("shift", 0.3);
  }
  if (j.contains("fixed_cutpoints")) {
    spec.fixed_cutpoints = j.at("fixed_cutpoints").get<std::vector<double>>();
  }
  spec.terms = j.value("terms", std::vector<Term>{});
  spec.Validate();
}

std::vector<double> EffectCode(int n_levels, int level) {
  if (n_levels < 2) {
    throw Error(ErrorKind::kSingleLevelFactor,
                "effect coding needs at least two levels");
  }
  if (level < 0 || level >= n_levels) {
    throw Error(ErrorKind::kIndexOutOfRange,
                "level " + std::to_string(level) + " outside 0.." +
                    std::to_string(n_levels - 1));
  }
  std::vector<double> row(static_cast<std::size_t>(n_levels - 1), 0.0);
  if (level == n_levels - 1) {
    std::fill(row.begin(), row.end(), -1.0);
  } else {
    row[static_cast<std::size_t>(level)] = 1.0;
  }
  return row;
}

int IndexCode(int a, int b, int levels_a, int levels_b) {
  if (a < 0 || b < 0 || a >= levels_a || b >= levels_b) {
    throw Error(ErrorKind::kIndexOutOfRange,
                "(" + std::to_string(a) + "," + std::to_string(b) +
                    ") outside (" + std::to_string(levels_a) + "," +
                    std::to_string(levels_b) + ")");
  }
  return a * levels_b + b;
}

ParameterLayout::ParameterLayout(const ModelSpec& spec, const Dataset& ds) {
  spec.Validate();
  const bool pairwise_data = ds.kind() == DatasetKind::kPairwise;
  if (pairwise_data == spec.ordered()) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string(ToString(spec.likelihood)) +
                    " model cannot be fitted to a " +
                    (pairwise_data ? "pairwise" : "scores") + " dataset");
  }
  AddBlock("intercept", BlockKind::kIntercept, {"intercept"}, -1);
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const Term& term = spec.terms[t];
    TermLayout tl;
    for (const auto& f : term.factors) {
      const int l = ds.factor(f).size();
      if (term.coding == CodingScheme::kEffect && l < 2) {
        throw Error(ErrorKind::kSingleLevelFactor,
                    "term '" + term.name + "': factor '" + f +
                        "' has fewer than two levels");
      }
      if (l < 1) {
        throw Error(ErrorKind::kShapeMismatch,
                    "factor '" + f + "' has no levels");
      }
      tl.levels.push_back(l);
      tl.labels.push_back(ds.factor(f).levels());
    }
    if (term.covariate && *term.covariate != kLengthDiffCovariate) {
      throw Error(ErrorKind::kUnknownFactor,
                  "unknown covariate '" + *term.covariate + "'");
    }
    if (term.covariate && !pairwise_data) {
      throw Error(ErrorKind::kUnknownFactor,
                  "covariate '" + *term.covariate +
                      "' is only defined for pairwise data");
    }
    tl.coefficients =
        AddBlock(term.name, BlockKind::kCoefficients,
                 CoefficientLabels(term, tl.levels, ds), static_cast<int>(t));
    if (term.hierarchical()) {
      std::vector<std::string> group_labels;
      tl.group_of.assign(static_cast<std::size_t>(tl.levels[0]), 0);
      if (*term.group == kPooledGroup) {
        group_labels = {""};
      } else {
        group_labels = ds.factor(*term.group).levels();
        std::vector<int> assigned(tl.group_of.size(), -1);
        for (std::size_t r = 0; r < ds.size(); ++r) {
          const auto member = ds.Level(term.factors[0], r);
          const auto group = ds.Level(*term.group, r);
          if (!member || !group) continue;
          auto& slot = assigned[static_cast<std::size_t>(*member)];
          if (slot >= 0 && slot != *group) {
            throw Error(ErrorKind::kInvalidSpec,
                        "term '" + term.name + "': level of '" +
                            term.factors[0] + "' belongs to two '" +
                            *term.group + "' groups");
          }
          slot = *group;
        }
        for (std::size_t m = 0; m < assigned.size(); ++m) {
          tl.group_of[m] = std::max(assigned[m], 0);
        }
      }
      const auto named = [&](const std::string& prefix) {
        std::vector<std::string> names;
        for (const auto& g : group_labels) {
          names.push_back(g.empty() ? prefix + term.name
                                    : prefix + term.name + "[" + g + "]");
        }
        return names;
      };
      tl.hyper_mean = AddBlock("mu_" + term.name, BlockKind::kHyperMean,
                               named("mu_"), static_cast<int>(t));
      tl.hyper_scale = AddBlock("sigma_" + term.name, BlockKind::kHyperScale,
                                named("sigma_"), static_cast<int>(t));
    }
    terms_.push_back(std::move(tl));
  }
  if (spec.ordered()) {
    const int k = spec.n_categories == 0 ? ds.n_categories() : spec.n_categories;
    if (spec.n_categories != 0 && spec.n_categories != ds.n_categories()) {
      throw Error(ErrorKind::kShapeMismatch,
                  "spec has K=" + std::to_string(spec.n_categories) +
                      " but dataset has K=" +
                      std::to_string(ds.n_categories()));
    }
    if (spec.fixed_cutpoints) {
      if (static_cast<int>(spec.fixed_cutpoints->size()) != k - 1) {
        throw Error(ErrorKind::kShapeMismatch,
                    "fixed cutpoints must have K-1 entries");
      }
    } else {
      std::vector<std::string> names;
      for (int j = 1; j < k; ++j) {
        names.push_back("cutpoints[" + std::to_string(j) + "]");
      }
      cutpoint_block_ =
          AddBlock("cutpoints", BlockKind::kCutpoints, std::move(names), -1);
    }
  }
}

int ParameterLayout::AddBlock(std::string name, BlockKind kind,
                              std::vector<std::string> names, int term) {
  Block b;
  b.name = std::move(name);
  b.kind = kind;
  b.offset = dim_;
  b.size = static_cast<int>(names.size());
  b.names = std::move(names);
  b.term = term;
  dim_ += b.size;
  names_.insert(names_.end(), b.names.begin(), b.names.end());
  blocks_.push_back(std::move(b));
  return static_cast<int>(blocks_.size()) - 1;
}

const Block* ParameterLayout::FindBlock(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

std::optional<int> ParameterLayout::IndexOf(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<int>(it - names_.begin());
}

ParameterVector::ParameterVector(ParameterLayout layout,
                                 std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != layout_.dim()) {
    throw Error(ErrorKind::kShapeMismatch,
                "parameter vector has " + std::to_string(values_.size()) +
                    " values for a layout of dimension " +
                    std::to_string(layout_.dim()));
  }
}

ParameterVector ParameterVector::Neutral(const ModelSpec& spec,
                                         ParameterLayout layout) {
  std::vector<double> values(static_cast<std::size_t>(layout.dim()), 0.0);
  for (const auto& b : layout.blocks()) {
    for (int k = 0; k < b.size; ++k) {
      auto& v = values[static_cast<std::size_t>(b.offset + k)];
      if (b.kind == BlockKind::kHyperScale) v = 1.0;
      if (b.kind == BlockKind::kCutpoints) {
        const auto& cp = spec.cutpoint_prior;
        v = cp.first.location +
            k * (std::exp(cp.difference.location) + cp.shift);
      }
    }
  }
  return ParameterVector(std::move(layout), std::move(values));
}

double ParameterVector::Get(std::string_view name) const {
  const auto idx = layout_.IndexOf(name);
  if (!idx) {
    throw Error(ErrorKind::kUnknownParameter,
                "no parameter '" + std::string(name) + "'");
  }
  return values_[static_cast<std::size_t>(*idx)];
}

void ParameterVector::Set(std::string_view name, double value) {
  const auto idx = layout_.IndexOf(name);
  if (!idx) {
    throw Error(ErrorKind::kUnknownParameter,
                "no parameter '" + std::string(name) + "'");
  }
  values_[static_cast<std::size_t>(*idx)] = value;
}

std::span<const double> ParameterVector::BlockValues(
    std::string_view block) const {
  const Block* b = layout_.FindBlock(block);
  if (b == nullptr) {
    throw Error(ErrorKind::kUnknownParameter,
                "no block '" + std::string(block) + "'");
  }
  return std::span<const double>(values_).subspan(
      static_cast<std::size_t>(b->offset), static_cast<std::size_t>(b->size));
}

DesignRow BuildDesignRow(const ModelSpec& spec, const ParameterLayout& layout,
                         const Dataset& ds, std::size_t record,
                         std::span<const double> covariate) {
  DesignRow row;
  Append(row, 0, 1.0, -1);
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const Term& term = spec.terms[t];
    const TermLayout& tl = layout.terms()[t];
    const int offset = layout.blocks()[static_cast<std::size_t>(tl.coefficients)]
                           .offset;
    std::vector<int> lv;
    for (const auto& f : term.factors) {
      const auto level = ds.Level(f, record);
      if (!level) {
        throw Error(ErrorKind::kShapeMismatch,
                    "record " + std::to_string(record) + " has no '" + f +
                        "' needed by term '" + term.name + "'");
      }
      lv.push_back(*level);
    }
    double x = 1.0;
    if (term.covariate) {
      if (record >= covariate.size()) {
        throw Error(ErrorKind::kShapeMismatch,
                    "no covariate value for record " + std::to_string(record));
      }
      x = covariate[record];
    }
    const int ti = static_cast<int>(t);
    if (term.factors.size() == 1) {
      const int l = tl.levels[0];
      switch (term.coding) {
        case CodingScheme::kEffect: {
          const auto code = EffectCode(l, lv[0]);
          for (int k = 0; k < l - 1; ++k) {
            if (code[static_cast<std::size_t>(k)] != 0.0) {
              Append(row, offset + k, x * code[static_cast<std::size_t>(k)], ti);
            }
          }
          break;
        }
        case CodingScheme::kIndex:
          Append(row, offset + lv[0], x, ti);
          break;
        case CodingScheme::kDummy:
          if (lv[0] > 0) Append(row, offset + lv[0] - 1, x, ti);
          break;
      }
    } else {
      const int la = tl.levels[0];
      const int lb = tl.levels[1];
      switch (term.coding) {
        case CodingScheme::kEffect: {
          const auto ca = EffectCode(la, lv[0]);
          const auto cb = EffectCode(lb, lv[1]);
          for (int a = 0; a < la - 1; ++a) {
            for (int b = 0; b < lb - 1; ++b) {
              const double w = ca[static_cast<std::size_t>(a)] *
                               cb[static_cast<std::size_t>(b)];
              if (w != 0.0) Append(row, offset + a * (lb - 1) + b, x * w, ti);
            }
          }
          break;
        }
        case CodingScheme::kIndex:
          Append(row, offset + IndexCode(lv[0], lv[1], la, lb), x, ti);
          break;
        case CodingScheme::kDummy: {
          const int c = IndexCode(lv[0], lv[1], la, lb);
          if (c > 0) Append(row, offset + c - 1, x, ti);
          break;
        }
      }
    }
  }
  return row;
}

bool IsReversed(const Dataset& ds, const PairwiseRecord& rec) {
  const auto& llms = ds.factor(kLlmFactor);
  return llms.Label(rec.llm_first) > llms.Label(rec.llm_second);
}

std::vector<double> OrientedLengthDiff(const Dataset& ds) {
  auto diff = StandardizeLengthDiff(ds);
  for (std::size_t i = 0; i < diff.size(); ++i) {
    if (IsReversed(ds, ds.pairwise()[i])) diff[i] = -diff[i];
  }
  return diff;
}

namespace {

std::vector<double> OrientedLengthDiff(const ModelSpec& spec,
                                       const Dataset& ds) {
  const bool needed = std::any_of(spec.terms.begin(), spec.terms.end(),
                                  [](const Term& t) { return t.covariate; });
  if (!needed || ds.kind() != DatasetKind::kPairwise) return {};
  return OrientedLengthDiff(ds);
}

}  // namespace

Model::Model(ModelSpec spec, const Dataset& ds)
    : spec_(std::move(spec)), layout_(spec_, ds) {
  if (spec_.ordered() && spec_.n_categories == 0) {
    spec_.n_categories = ds.n_categories();
  }
  n_outcomes_ = spec_.ordered() ? spec_.n_categories : 2;
  const auto covariate = OrientedLengthDiff(spec_, ds);
  std::map<DesignRow, std::size_t> cell_index;
  outcomes_.reserve(ds.size());
  obs_cell_.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    DesignRow row = BuildDesignRow(spec_, layout_, ds, i, covariate);
    int outcome = 0;
    if (spec_.ordered()) {
      outcome = ds.scores()[i].score;
    } else {
      const auto& rec = ds.pairwise()[i];
      outcome = (rec.chose_first != IsReversed(ds, rec)) ? 1 : 0;
    }
    outcomes_.push_back(outcome);
    auto [it, inserted] = cell_index.emplace(row, cells_.size());
    if (inserted) {
      cells_.push_back(
          Cell{std::move(row),
               std::vector<double>(static_cast<std::size_t>(n_outcomes_), 0.0)});
    }
    const int slot = spec_.ordered() ? outcome - 1 : outcome;
    cells_[it->second].counts[static_cast<std::size_t>(slot)] += 1.0;
    obs_cell_.push_back(it->second);
  }
}

const DesignRow& Model::row(std::size_t i) const {
  return cells_[obs_cell_.at(i)].row;
}

double Model::LinearPredictor(std::size_t i,
                              std::span<const double> theta) const {
  const DesignRow& r = row(i);
  double phi = 0.0;
  for (std::size_t k = 0; k < r.index.size(); ++k) {
    phi += r.weight[k] * theta[static_cast<std::size_t>(r.index[k])];
  }
  return phi;
}

double Model::TermContribution(std::size_t i, int term,
                               std::span<const double> theta) const {
  const DesignRow& r = row(i);
  double sum = 0.0;
  for (std::size_t k = 0; k < r.index.size(); ++k) {
    if (r.term[k] == term) {
      sum += r.weight[k] * theta[static_cast<std::size_t>(r.index[k])];
    }
  }
  return sum;
}

std::vector<double> Model::Cutpoints(std::span<const double> theta) const {
  if (!spec_.ordered()) return {};
  if (spec_.fixed_cutpoints) return *spec_.fixed_cutpoints;
  const Block& b =
      layout_.blocks()[static_cast<std::size_t>(layout_.cutpoint_block())];
  const auto first = theta.begin() + b.offset;
  return std::vector<double>(first, first + b.size);
}

std::vector<int> Model::MainEffectTerms(std::string_view factor) const {
  std::vector<int> out;
  for (std::size_t t = 0; t < spec_.terms.size(); ++t) {
    const Term& term = spec_.terms[t];
    if (term.factors.size() == 1 && term.factors[0] == factor &&
        !term.covariate) {
      out.push_back(static_cast<int>(t));
    }
  }
  return out;
}

double TermValue(const ModelSpec& spec, const ParameterLayout& layout, int term,
                 std::span<const int> levels, std::span<const double> theta) {
  const Term& t = spec.terms.at(static_cast<std::size_t>(term));
  const TermLayout& tl = layout.terms()[static_cast<std::size_t>(term)];
  const int offset =
      layout.blocks()[static_cast<std::size_t>(tl.coefficients)].offset;
  const auto at = [&](int k) { return theta[static_cast<std::size_t>(offset + k)]; };
  if (t.factors.size() == 1) {
    const int l = tl.levels[0];
    switch (t.coding) {
      case CodingScheme::kEffect: {
        const auto code = EffectCode(l, levels[0]);
        double v = 0.0;
        for (int k = 0; k < l - 1; ++k) v += code[static_cast<std::size_t>(k)] * at(k);
        return v;
      }
      case CodingScheme::kIndex:
        return at(levels[0]);
      case CodingScheme::kDummy:
        return levels[0] > 0 ? at(levels[0] - 1) : 0.0;
    }
    return 0.0;
  }
  const int la = tl.levels[0];
  const int lb = tl.levels[1];
  switch (t.coding) {
    case CodingScheme::kEffect: {
      const auto ca = EffectCode(la, levels[0]);
      const auto cb = EffectCode(lb, levels[1]);
      double v = 0.0;
      for (int a = 0; a < la - 1; ++a) {
        for (int b = 0; b < lb - 1; ++b) {
          v += ca[static_cast<std::size_t>(a)] * cb[static_cast<std::size_t>(b)] *
               at(a * (lb - 1) + b);
        }
      }
      return v;
    }
    case CodingScheme::kIndex:
      return at(IndexCode(levels[0], levels[1], la, lb));
    case CodingScheme::kDummy: {
      const int c = IndexCode(levels[0], levels[1], la, lb);
      return c > 0 ? at(c - 1) : 0.0;
    }
  }
  return 0.0;
}

double LinearPredictor(const ModelSpec& spec, const Dataset& ds,
                       std::size_t record, const ParameterVector& params) {
  const ParameterLayout layout(spec, ds);
  if (layout.names() != params.layout().names()) {
    throw Error(ErrorKind::kShapeMismatch,
                "parameter vector was laid out for a different model");
  }
  const auto covariate = OrientedLengthDiff(spec, ds);
  const DesignRow row = BuildDesignRow(spec, layout, ds, record, covariate);
  double phi = 0.0;
  for (std::size_t k = 0; k < row.index.size(); ++k) {
    phi += row.weight[k] *
           params.values()[static_cast<std::size_t>(row.index[k])];
  }
  return phi;
}

}  // namespace grader_audit
