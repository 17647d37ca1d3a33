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
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "grader_audit/error.hpp"
#include "grader_audit/likelihoods.hpp"

namespace grader_audit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool HasCovariate(const Term& t) { return t.covariate.has_value(); }

// Mean of a term's value over its level grid, with `factor` (if the term
// contains it) held at `level`.
double TermMean(const Model& model, int t, std::string_view factor, int level,
                std::span<const double> theta) {
  const Term& term = model.spec().terms[static_cast<std::size_t>(t)];
  const TermLayout& tl = model.layout().terms()[static_cast<std::size_t>(t)];
  const auto levels_of = [&](std::size_t f) {
    std::vector<int> out;
    if (term.factors[f] == factor) {
      out.push_back(level);
    } else {
      for (int l = 0; l < tl.levels[f]; ++l) out.push_back(l);
    }
    return out;
  };
  double sum = 0.0;
  int count = 0;
  if (term.factors.size() == 1) {
    for (const int a : levels_of(0)) {
      const int lv[] = {a};
      sum += TermValue(model.spec(), model.layout(), t, lv, theta);
      ++count;
    }
  } else {
    for (const int a : levels_of(0)) {
      for (const int b : levels_of(1)) {
        const int lv[] = {a, b};
        sum += TermValue(model.spec(), model.layout(), t, lv, theta);
        ++count;
      }
    }
  }
  return sum / count;
}

bool Contains(const Term& t, std::string_view factor) {
  return std::find(t.factors.begin(), t.factors.end(), factor) != t.factors.end();
}

struct FactorInfo {
  std::string name;
  std::vector<std::string> labels;
};

std::vector<FactorInfo> GridFactors(const Model& model) {
  std::vector<FactorInfo> out;
  const auto& spec = model.spec();
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    if (HasCovariate(spec.terms[t])) continue;
    for (std::size_t f = 0; f < spec.terms[t].factors.size(); ++f) {
      const auto& name = spec.terms[t].factors[f];
      const bool seen = std::any_of(out.begin(), out.end(),
                                    [&](const FactorInfo& i) { return i.name == name; });
      if (!seen) out.push_back({name, model.layout().terms()[t].labels[f]});
    }
  }
  return out;
}

double Sigmoid(double x) { return InvLogit(x); }

nlohmann::json Finite(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
}

}  // namespace

double Quantile(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

Summary Summarize(std::string name, std::span<const double> samples) {
  if (samples.size() < 4) {
    throw Error(ErrorKind::kTooFewDraws, "summaries need at least 4 draws");
  }
  Summary s;
  s.name = std::move(name);
  const auto n = static_cast<double>(samples.size());
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / (n - 1.0));
  std::vector<double> sorted(samples.begin(), samples.end());
  s.ci_low = Quantile(sorted, 0.025);
  s.ci_high = Quantile(std::move(sorted), 0.975);
  return s;
}

std::vector<Summary> Summarize(const PosteriorDraws& draws, std::string_view block) {
  std::vector<Summary> out;
  for (const auto col : draws.BlockColumns(block)) {
    out.push_back(Summarize(draws.names()[col], draws.Column(col)));
  }
  return out;
}

std::vector<Summary> SummarizeAll(const PosteriorDraws& draws) {
  std::vector<Summary> out;
  for (std::size_t col = 0; col < draws.n_columns(); ++col) {
    out.push_back(Summarize(draws.names()[col], draws.Column(col)));
  }
  return out;
}

ContrastResult Contrast(const PosteriorDraws& draws, const ContrastSpec& cs) {
  std::vector<std::pair<std::size_t, double>> cols;
  for (const auto& [name, w] : cs.weights) {
    const auto idx = draws.IndexOf(name);
    if (!idx) {
      throw Error(ErrorKind::kUnknownParameter,
                  "contrast '" + cs.name + "' references unknown parameter '" +
                      name + "'");
    }
    cols.emplace_back(*idx, w);
  }
  ContrastResult r;
  r.samples.resize(static_cast<std::size_t>(draws.total()));
  for (int s = 0; s < draws.total(); ++s) {
    const auto row = draws.Row(s);
    double v = 0.0;
    for (const auto& [c, w] : cols) v += w * row[c];
    r.samples[static_cast<std::size_t>(s)] = v;
  }
  const auto n = static_cast<double>(r.samples.size());
  r.fraction_below_zero =
      static_cast<double>(std::count_if(r.samples.begin(), r.samples.end(),
                                        [](double v) { return v < 0.0; })) / n;
  r.fraction_above_zero =
      static_cast<double>(std::count_if(r.samples.begin(), r.samples.end(),
                                        [](double v) { return v > 0.0; })) / n;
  r.summary = Summarize(cs.name, r.samples);
  return r;
}

std::string_view ToString(RopeVerdict verdict) {
  switch (verdict) {
    case RopeVerdict::kPracticallyEquivalent: return "PracticallyEquivalent";
    case RopeVerdict::kNotEquivalent: return "NotEquivalent";
    case RopeVerdict::kUndecided: return "Undecided";
  }
  return "Undecided";
}

RopeResult RopeCheck(std::span<const double> samples, double low, double high) {
  if (samples.empty()) throw Error(ErrorKind::kEmptySamples, "no samples for the ROPE check");
  if (!(low < high)) {
    throw Error(ErrorKind::kInvalidConfig, "ROPE needs low < high");
  }
  RopeResult r;
  r.low = low;
  r.high = high;
  const auto inside = std::count_if(samples.begin(), samples.end(),
                                    [&](double v) { return v >= low && v <= high; });
  r.fraction_inside = static_cast<double>(inside) / static_cast<double>(samples.size());
  std::vector<double> x(samples.begin(), samples.end());
  const double lo = Quantile(x, 0.025);
  const double hi = Quantile(std::move(x), 0.975);
  if (lo >= low && hi <= high) {
    r.verdict = RopeVerdict::kPracticallyEquivalent;
  } else if (hi < low || lo > high) {
    r.verdict = RopeVerdict::kNotEquivalent;
  } else {
    r.verdict = RopeVerdict::kUndecided;
  }
  return r;
}

std::string_view ToString(PredictMode mode) {
  return mode == PredictMode::kFull ? "Full" : "RemoveGraderMain";
}

std::vector<int> PredictOutcomes(const Model& model, std::span<const double> theta,
                                 PredictMode mode, Rng& rng) {
  const std::vector<double> cuts = model.Cutpoints(theta);
  const std::vector<int> grader_terms = model.MainEffectTerms(kGraderFactor);
  std::vector<int> out(model.n_obs());
  for (std::size_t i = 0; i < model.n_obs(); ++i) {
    double phi = model.LinearPredictor(i, theta);
    if (mode == PredictMode::kRemoveGraderMain) {
      for (const int t : grader_terms) phi -= model.TermContribution(i, t, theta);
    }
    const double u = rng.Uniform();
    if (model.spec().ordered()) {
      int y = static_cast<int>(cuts.size()) + 1;
      for (std::size_t j = 0; j < cuts.size(); ++j) {
        if (u < InvLogit(cuts[j] - phi)) {
          y = static_cast<int>(j) + 1;
          break;
        }
      }
      out[i] = y;
    } else {
      out[i] = u < InvLogit(phi) ? 1 : 0;
    }
  }
  return out;
}

std::vector<std::vector<int>> PosteriorPredict(
    const ModelSpec& spec, const Dataset& fitted, const PosteriorDraws& draws,
    const Dataset& rows, PredictMode mode, const std::vector<int>& draw_indices,
    std::uint64_t seed) {
  const Dataset recoded = rows.RecodedTo(fitted);
  const Model model(spec, recoded);
  const auto& names = model.layout().names();
  if (draws.n_free() != static_cast<int>(names.size()) ||
      !std::equal(names.begin(), names.end(), draws.names().begin())) {
    throw Error(ErrorKind::kShapeMismatch, "draws do not belong to this model");
  }
  std::vector<std::vector<int>> out;
  for (const int d : draw_indices) {
    if (d < 0 || d >= draws.total()) {
      throw Error(ErrorKind::kIndexOutOfRange, "draw index out of range");
    }
    Rng rng = Rng::ForStream(seed, static_cast<std::uint64_t>(d));
    out.push_back(PredictOutcomes(model, draws.Theta(d), mode, rng));
  }
  return out;
}

std::vector<int> ThinnedDrawIndices(int total, int m) {
  std::vector<int> out;
  if (m >= total) {
    out.resize(static_cast<std::size_t>(total));
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  for (int k = 0; k < m; ++k) {
    out.push_back(static_cast<int>((static_cast<long long>(k) * total) / m));
  }
  return out;
}

std::string_view ToString(AlphaMetric metric) {
  return metric == AlphaMetric::kOrdinal ? "ordinal" : "interval";
}

std::optional<AlphaMetric> ParseAlphaMetric(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ordinal") return AlphaMetric::kOrdinal;
  if (lower == "interval") return AlphaMetric::kInterval;
  return std::nullopt;
}

double KrippendorffAlpha(const RatingTable& table, AlphaMetric metric) {
  std::set<int> value_set;
  for (const auto& unit : table) {
    const auto m = std::count_if(unit.begin(), unit.end(),
                                 [](const auto& v) { return v.has_value(); });
    if (m < 2) continue;
    for (const auto& v : unit) {
      if (v) value_set.insert(*v);
    }
  }
  if (value_set.empty()) {
    throw Error(ErrorKind::kTooFewRatings, "no unit has two or more ratings");
  }
  const std::vector<int> values(value_set.begin(), value_set.end());
  const std::size_t nv = values.size();
  std::map<int, std::size_t> index;
  for (std::size_t c = 0; c < nv; ++c) index[values[c]] = c;

  std::vector<double> o(nv * nv, 0.0);
  std::vector<double> counts(nv);
  for (const auto& unit : table) {
    std::fill(counts.begin(), counts.end(), 0.0);
    double m = 0.0;
    for (const auto& v : unit) {
      if (v) {
        counts[index.count(*v) ? index[*v] : 0] += 1.0;
        m += 1.0;
      }
    }
    if (m < 2.0) continue;
    for (std::size_t c = 0; c < nv; ++c) {
      if (counts[c] == 0.0) continue;
      for (std::size_t k = 0; k < nv; ++k) {
        const double pairs = c == k ? counts[c] * (counts[c] - 1.0) : counts[c] * counts[k];
        o[c * nv + k] += pairs / (m - 1.0);
      }
    }
  }
  std::vector<double> n_c(nv, 0.0);
  for (std::size_t c = 0; c < nv; ++c) {
    for (std::size_t k = 0; k < nv; ++k) n_c[c] += o[c * nv + k];
  }
  const double n = std::accumulate(n_c.begin(), n_c.end(), 0.0);

  const auto delta2 = [&](std::size_t c, std::size_t k) {
    if (metric == AlphaMetric::kInterval) {
      const double d = values[c] - values[k];
      return d * d;
    }
    const std::size_t lo = std::min(c, k), hi = std::max(c, k);
    double s = 0.0;
    for (std::size_t g = lo; g <= hi; ++g) s += n_c[g];
    const double d = s - (n_c[c] + n_c[k]) / 2.0;
    return d * d;
  };
  double observed = 0.0, expected = 0.0;
  for (std::size_t c = 0; c < nv; ++c) {
    for (std::size_t k = 0; k < nv; ++k) {
      const double d2 = delta2(c, k);
      observed += o[c * nv + k] * d2;
      expected += n_c[c] * n_c[k] * d2;
    }
  }
  if (!(expected > 0.0)) {
    throw Error(ErrorKind::kNoVariation, "all pairable ratings are identical");
  }
  return 1.0 - (n - 1.0) * observed / expected;
}

RatingTable AgreementTable(const Dataset& ds, std::span<const int> scores) {
  if (ds.kind() != DatasetKind::kScores) {
    throw Error(ErrorKind::kShapeMismatch, "agreement needs a scores dataset");
  }
  if (!ds.HasFactor(kItemFactor) || ds.factor(kItemFactor).size() == 0) {
    throw Error(ErrorKind::kMissingItemColumn, "records carry no item identifiers");
  }
  if (!scores.empty() && scores.size() != ds.size()) {
    throw Error(ErrorKind::kShapeMismatch, "replicate length differs from the data");
  }
  const int n_graders = ds.factor(kGraderFactor).size();
  std::map<std::tuple<int, int, int>, int> occurrences;  // (item, llm, grader)
  std::map<std::tuple<int, int, int>, std::size_t> units;  // (item, llm, k)
  RatingTable table;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto& rec = ds.scores()[r];
    if (!rec.item) {
      throw Error(ErrorKind::kMissingItemColumn,
                  "record " + std::to_string(r) + " has no item identifier");
    }
    const int k = occurrences[{*rec.item, rec.llm, rec.grader}]++;
    const auto [it, inserted] = units.emplace(std::tuple{*rec.item, rec.llm, k}, table.size());
    if (inserted) table.emplace_back(static_cast<std::size_t>(n_graders));
    table[it->second][static_cast<std::size_t>(rec.grader)] =
        scores.empty() ? rec.score : scores[r];
  }
  return table;
}

AlphaSample AlphaPosterior(const Model& model, const Dataset& ds,
                           const PosteriorDraws& draws, PredictMode mode,
                           AlphaMetric metric, int reps, std::uint64_t seed) {
  AgreementTable(ds);  // validates the item column
  AlphaSample out;
  out.mode = mode;
  const std::uint64_t mode_tag = mode == PredictMode::kFull ? 0 : 1;
  for (const int d : ThinnedDrawIndices(draws.total(), reps)) {
    Rng rng = Rng::ForStream(seed, 2 * static_cast<std::uint64_t>(d) + mode_tag);
    const auto scores = PredictOutcomes(model, draws.Theta(d), mode, rng);
    try {
      out.samples.push_back(KrippendorffAlpha(AgreementTable(ds, scores), metric));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNoVariation) throw;
    }
  }
  if (out.samples.size() >= 4) out.summary = Summarize("alpha", out.samples);
  out.summary.name = std::string("alpha_") +
                     (mode == PredictMode::kFull ? "posterior" : "counterfactual");
  return out;
}

AgreementReport Agreement(const ModelSpec& spec, const Dataset& ds,
                          const PosteriorDraws& draws, AlphaMetric metric, int reps,
                          std::uint64_t seed) {
  const Model model(spec, ds);
  AgreementReport r;
  r.metric = metric;
  r.alpha_observed = KrippendorffAlpha(AgreementTable(ds), metric);
  r.posterior = AlphaPosterior(model, ds, draws, PredictMode::kFull, metric, reps, seed);
  r.counterfactual = AlphaPosterior(model, ds, draws, PredictMode::kRemoveGraderMain,
                                    metric, reps, seed);
  return r;
}

std::string_view ToString(IntervalClass c) {
  switch (c) {
    case IntervalClass::kNarrow: return "Narrow";
    case IntervalClass::kModerate: return "Moderate";
    case IntervalClass::kWide: return "Wide";
  }
  return "Narrow";
}

IntervalClass ClassifyInterval(double size) {
  if (size < 1.0) return IntervalClass::kNarrow;
  if (size < 1.4) return IntervalClass::kModerate;
  return IntervalClass::kWide;
}

CalibrationReport CalibrationFromCutpoints(std::span<const double> means) {
  CalibrationReport r;
  for (std::size_t j = 0; j < means.size(); ++j) {
    CutpointEntry e;
    e.index = static_cast<int>(j) + 1;
    e.value = means[j];
    if (j > 0) {
      e.interval = means[j] - means[j - 1];
      e.classification = ClassifyInterval(*e.interval);
    }
    r.cutpoints.push_back(e);
  }
  return r;
}

CalibrationReport CutpointReport(const PosteriorDraws& draws) {
  std::vector<std::size_t> cols;
  try {
    cols = draws.BlockColumns("cutpoints");
  } catch (const Error&) {
    throw Error(ErrorKind::kNotOrderedModel, "draws carry no estimated cutpoints");
  }
  std::vector<double> means;
  for (const auto c : cols) {
    const auto x = draws.Column(c);
    means.push_back(std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()));
  }
  return CalibrationFromCutpoints(means);
}

namespace {

struct Digraph {
  std::vector<std::string> nodes;
  std::vector<std::vector<std::size_t>> out;
};

Digraph MajorityGraph(const std::vector<Preference>& prefs) {
  Digraph g;
  std::map<std::string, std::size_t> id;
  const auto node = [&](const std::string& name) {
    const auto [it, inserted] = id.emplace(name, g.nodes.size());
    if (inserted) {
      g.nodes.push_back(name);
      g.out.emplace_back();
    }
    return it->second;
  };
  for (const auto& p : prefs) {
    const auto a = node(p.a);
    const auto b = node(p.b);
    if (p.p_a_beats_b > 0.5) g.out[a].push_back(b);
    if (p.p_a_beats_b < 0.5) g.out[b].push_back(a);
  }
  return g;
}

}  // namespace

bool HasPreferenceCycle(const std::vector<Preference>& prefs) {
  const Digraph g = MajorityGraph(prefs);
  std::vector<int> color(g.nodes.size(), 0);
  const std::function<bool(std::size_t)> visit = [&](std::size_t v) {
    color[v] = 1;
    for (const auto w : g.out[v]) {
      if (color[w] == 1) return true;
      if (color[w] == 0 && visit(w)) return true;
    }
    color[v] = 2;
    return false;
  };
  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    if (color[v] == 0 && visit(v)) return true;
  }
  return false;
}

std::vector<std::string> MajorityOrder(const std::vector<Preference>& prefs) {
  const Digraph g = MajorityGraph(prefs);
  std::vector<std::size_t> order(g.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (g.out[a].size() != g.out[b].size()) return g.out[a].size() > g.out[b].size();
    return g.nodes[a] < g.nodes[b];
  });
  std::vector<std::string> out;
  for (const auto v : order) out.push_back(g.nodes[v]);
  return out;
}

TransitivityReport TransitivityCheck(const Model& model, const PosteriorDraws& draws) {
  const auto& spec = model.spec();
  const auto& layout = model.layout();
  int pair_term = -1;
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    if (Contains(spec.terms[t], kPairFactor) && spec.terms[t].factors.size() == 1 &&
        !HasCovariate(spec.terms[t])) {
      pair_term = static_cast<int>(t);
    }
  }
  if (spec.ordered() || pair_term < 0) {
    throw Error(ErrorKind::kShapeMismatch, "transitivity needs a pairwise model with a pair term");
  }
  const auto& pair_labels = layout.terms()[static_cast<std::size_t>(pair_term)].labels[0];
  std::set<std::string> llms;
  std::vector<std::pair<std::string, std::string>> members;
  for (const auto& label : pair_labels) {
    const auto pos = label.find("_vs_");
    std::string a = label.substr(0, pos);
    std::string b = pos == std::string::npos ? std::string() : label.substr(pos + 4);
    llms.insert(a);
    llms.insert(b);
    members.emplace_back(std::move(a), std::move(b));
  }
  if (llms.size() < 3) {
    throw Error(ErrorKind::kTooFewModels, "transitivity needs at least 3 models");
  }
  const std::size_t n_pairs = pair_labels.size();
  std::vector<std::vector<double>> probs(n_pairs);
  int cycles = 0;
  for (int s = 0; s < draws.total(); ++s) {
    const auto theta = draws.Theta(s);
    std::vector<Preference> prefs;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      double eta = theta[0];
      for (std::size_t t = 0; t < spec.terms.size(); ++t) {
        if (HasCovariate(spec.terms[t])) continue;
        eta += TermMean(model, static_cast<int>(t), kPairFactor, static_cast<int>(p), theta);
      }
      const double prob = Sigmoid(eta);
      probs[p].push_back(prob);
      prefs.push_back({members[p].first, members[p].second, prob});
    }
    if (HasPreferenceCycle(prefs)) ++cycles;
  }
  TransitivityReport r;
  std::vector<Preference> mean_prefs;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    PairProbability pp;
    pp.pair = pair_labels[p];
    pp.first = members[p].first;
    pp.second = members[p].second;
    pp.p_first = Summarize("p_" + pair_labels[p], probs[p]);
    mean_prefs.push_back({pp.first, pp.second, pp.p_first.mean});
    r.pairs.push_back(std::move(pp));
  }
  r.cycle = HasPreferenceCycle(mean_prefs);
  r.cycle_frequency = static_cast<double>(cycles) / draws.total();
  if (!r.cycle) r.ordering = MajorityOrder(mean_prefs);
  return r;
}

std::vector<std::string> IdentifiedNames(const Model& model) {
  std::vector<std::string> out;
  const auto& spec = model.spec();
  for (const auto& f : GridFactors(model)) {
    for (const auto& l : f.labels) out.push_back("marginal:" + f.name + "[" + l + "]");
  }
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const Term& term = spec.terms[t];
    const auto& labels = model.layout().terms()[t].labels;
    if (HasCovariate(term)) {
      if (term.factors.size() != 1) continue;
      for (const auto& l : labels[0]) out.push_back("slope:" + term.name + "[" + l + "]");
    } else if (term.factors.size() == 2) {
      for (const auto& a : labels[0]) {
        for (const auto& b : labels[1]) {
          out.push_back("interaction:" + term.factors[0] + ":" + term.factors[1] + "[" +
                        a + "," + b + "]");
        }
      }
    }
  }
  if (!spec.ordered()) out.push_back("grand_mean");
  return out;
}

std::vector<double> IdentifiedValues(const Model& model, std::span<const double> theta) {
  std::vector<double> out;
  const auto& spec = model.spec();
  const auto n_terms = static_cast<int>(spec.terms.size());
  for (const auto& f : GridFactors(model)) {
    for (std::size_t l = 0; l < f.labels.size(); ++l) {
      double v = 0.0;
      for (int t = 0; t < n_terms; ++t) {
        const Term& term = spec.terms[static_cast<std::size_t>(t)];
        if (HasCovariate(term) || !Contains(term, f.name)) continue;
        v += TermMean(model, t, f.name, static_cast<int>(l), theta) -
             TermMean(model, t, "", 0, theta);
      }
      out.push_back(v);
    }
  }
  for (int t = 0; t < n_terms; ++t) {
    const Term& term = spec.terms[static_cast<std::size_t>(t)];
    const auto& tl = model.layout().terms()[static_cast<std::size_t>(t)];
    if (HasCovariate(term)) {
      if (term.factors.size() != 1) continue;
      for (int l = 0; l < tl.levels[0]; ++l) {
        const int lv[] = {l};
        out.push_back(TermValue(spec, model.layout(), t, lv, theta));
      }
    } else if (term.factors.size() == 2) {
      const double grand = TermMean(model, t, "", 0, theta);
      for (int a = 0; a < tl.levels[0]; ++a) {
        const double row = TermMean(model, t, term.factors[0], a, theta);
        for (int b = 0; b < tl.levels[1]; ++b) {
          const double col = TermMean(model, t, term.factors[1], b, theta);
          const int lv[] = {a, b};
          out.push_back(TermValue(spec, model.layout(), t, lv, theta) - row - col + grand);
        }
      }
    }
  }
  if (!spec.ordered()) {
    double v = theta[0];
    for (int t = 0; t < n_terms; ++t) {
      if (!HasCovariate(spec.terms[static_cast<std::size_t>(t)])) {
        v += TermMean(model, t, "", 0, theta);
      }
    }
    out.push_back(v);
  }
  return out;
}

PosteriorDraws WithIdentified(const Model& model, const PosteriorDraws& draws) {
  std::vector<std::string> names = draws.names();
  for (auto& n : IdentifiedNames(model)) names.push_back(std::move(n));
  std::vector<double> values;
  values.reserve(names.size() * static_cast<std::size_t>(draws.total()));
  for (int s = 0; s < draws.total(); ++s) {
    const auto row = draws.Row(s);
    values.insert(values.end(), row.begin(), row.end());
    const auto extra = IdentifiedValues(model, draws.Theta(s));
    values.insert(values.end(), extra.begin(), extra.end());
  }
  PosteriorDraws out(std::move(names), draws.n_free(), draws.chains(),
                     draws.iterations(), std::move(values));
  out.divergences = draws.divergences;
  out.step_size = draws.step_size;
  out.inverse_metric = draws.inverse_metric;
  out.mean_accept = draws.mean_accept;
  out.seed = draws.seed;
  return out;
}

std::vector<ContrastSpec> StandardContrasts(const Model& model, const Dataset& ds) {
  std::vector<ContrastSpec> out;
  const auto& spec = model.spec();
  const auto names = IdentifiedNames(model);
  const auto has = [&](const std::string& n) {
    return std::find(names.begin(), names.end(), n) != names.end();
  };

  // Grader type of every grader, when the data records it.
  if (ds.kind() == DatasetKind::kScores && ds.HasFactor(kGraderTypeFactor)) {
    const auto& graders = ds.factor(kGraderFactor);
    const auto& types = ds.factor(kGraderTypeFactor);
    const auto type_of = ds.GraderTypeOfGrader();
    const Term* hier = nullptr;
    for (const auto& t : spec.terms) {
      if (t.hierarchical() && t.factors[0] == kGraderFactor && t.group &&
          *t.group == kGraderTypeFactor) {
        hier = &t;
      }
    }
    const auto human = types.Find(ToString(GraderType::kHuman));
    const auto autog = types.Find(ToString(GraderType::kAutograder));
    if (human && autog) {
      ContrastSpec cs{"autograder_minus_human", {}};
      if (hier != nullptr) {
        cs.weights = {{"mu_" + hier->name + "[autograder]", 1.0},
                      {"mu_" + hier->name + "[human]", -1.0}};
      } else if (has("marginal:grader[" + graders.Label(0) + "]")) {
        double n_auto = 0.0, n_human = 0.0;
        for (int g = 0; g < graders.size(); ++g) {
          (type_of[static_cast<std::size_t>(g)] == *autog ? n_auto : n_human) += 1.0;
        }
        for (int g = 0; g < graders.size(); ++g) {
          const bool is_auto = type_of[static_cast<std::size_t>(g)] == *autog;
          cs.weights.emplace_back("marginal:grader[" + graders.Label(g) + "]",
                                  is_auto ? 1.0 / n_auto : -1.0 / n_human);
        }
      }
      if (!cs.weights.empty()) out.push_back(std::move(cs));
    }
  }

  for (const auto& f : GridFactors(model)) {
    if (f.name != kLlmFactor) continue;
    for (std::size_t a = 0; a < f.labels.size(); ++a) {
      for (std::size_t b = a + 1; b < f.labels.size(); ++b) {
        out.push_back({"llm:" + f.labels[a] + "_minus_" + f.labels[b],
                       {{"marginal:llm[" + f.labels[a] + "]", 1.0},
                        {"marginal:llm[" + f.labels[b] + "]", -1.0}}});
      }
    }
  }

  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const Term& term = spec.terms[t];
    if (HasCovariate(term) || term.factors.size() != 2 ||
        term.factors[0] != kGraderFactor || term.factors[1] != kLlmFactor) {
      continue;
    }
    const auto& labels = model.layout().terms()[t].labels;
    const std::string prefix = "interaction:grader:llm[";
    for (const auto& g : labels[0]) {
      for (std::size_t a = 0; a < labels[1].size(); ++a) {
        for (std::size_t b = a + 1; b < labels[1].size(); ++b) {
          out.push_back({"self_bias:" + g + ":" + labels[1][a] + "_minus_" + labels[1][b],
                         {{prefix + g + "," + labels[1][a] + "]", 1.0},
                          {prefix + g + "," + labels[1][b] + "]", -1.0}}});
        }
      }
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const Summary& s) {
  j = nlohmann::json{{"name", s.name},
                     {"mean", Finite(s.mean)},
                     {"sd", Finite(s.sd)},
                     {"ci_low", Finite(s.ci_low)},
                     {"ci_high", Finite(s.ci_high)}};
}

void to_json(nlohmann::json& j, const ContrastResult& c) {
  j = c.summary;
  j["fraction_below_zero"] = c.fraction_below_zero;
  j["fraction_above_zero"] = c.fraction_above_zero;
}

void to_json(nlohmann::json& j, const RopeResult& r) {
  j = nlohmann::json{{"low", r.low},
                     {"high", r.high},
                     {"fraction_inside", r.fraction_inside},
                     {"verdict", ToString(r.verdict)}};
}

void to_json(nlohmann::json& j, const AgreementReport& r) {
  const auto sample = [](const AlphaSample& a) {
    nlohmann::json out = a.summary;
    out["mode"] = ToString(a.mode);
    out["n"] = a.samples.size();
    return out;
  };
  j = nlohmann::json{{"metric", ToString(r.metric)},
                     {"alpha_observed", r.alpha_observed},
                     {"alpha_posterior", sample(r.posterior)},
                     {"alpha_counterfactual", sample(r.counterfactual)}};
}

void to_json(nlohmann::json& j, const CalibrationReport& r) {
  j = nlohmann::json::array();
  for (const auto& e : r.cutpoints) {
    nlohmann::json row{{"cutpoint", e.index}, {"value", e.value}};
    row["interval"] = e.interval ? nlohmann::json(*e.interval) : nlohmann::json();
    row["classification"] = e.classification
                                ? nlohmann::json(ToString(*e.classification))
                                : nlohmann::json();
    j.push_back(std::move(row));
  }
}

void to_json(nlohmann::json& j, const TransitivityReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    nlohmann::json e = p.p_first;
    e["pair"] = p.pair;
    e["first"] = p.first;
    e["second"] = p.second;
    pairs.push_back(std::move(e));
  }
  j = nlohmann::json{{"pairs", std::move(pairs)},
                     {"cycle", r.cycle},
                     {"cycle_frequency", r.cycle_frequency},
                     {"ordering", r.ordering}};
}

}  // namespace grader_audit
