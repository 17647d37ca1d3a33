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

#include "grader_audit/compare.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grader_audit/error.hpp"
#include "grader_audit/likelihoods.hpp"

namespace grader_audit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double LogSumExp(const std::vector<double>& x) {
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

double SampleVariance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double mean =
      std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

double SeOfSum(const std::vector<double>& pointwise) {
  return std::sqrt(static_cast<double>(pointwise.size()) *
                   SampleVariance(pointwise));
}

void RequireDraws(const PointwiseLogLik& ll) {
  if (ll.draws < 2) {
    throw Error(ErrorKind::kTooFewDraws, "need at least 2 posterior draws");
  }
  if (ll.values.size() != static_cast<std::size_t>(ll.draws) *
                              static_cast<std::size_t>(ll.obs)) {
    throw Error(ErrorKind::kShapeMismatch, "log-likelihood matrix has the wrong size");
  }
}

std::string Num(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json NullIfNaN(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
}

}  // namespace

std::vector<double> PointwiseLogLik::Column(int i) const {
  std::vector<double> out(static_cast<std::size_t>(draws));
  for (int s = 0; s < draws; ++s) out[static_cast<std::size_t>(s)] = at(s, i);
  return out;
}

PointwiseLogLik PointwiseLoglik(const Model& model, const PosteriorDraws& draws) {
  const auto& names = model.layout().names();
  if (draws.n_free() != static_cast<int>(names.size()) ||
      !std::equal(names.begin(), names.end(), draws.names().begin())) {
    throw Error(ErrorKind::kShapeMismatch,
                "draws do not match the parameters of model '" +
                    model.spec().name + "'");
  }
  PointwiseLogLik ll;
  ll.draws = draws.total();
  ll.obs = static_cast<int>(model.n_obs());
  ll.values.resize(static_cast<std::size_t>(ll.draws) * model.n_obs());
  const JointDensity density(model);
  for (int s = 0; s < ll.draws; ++s) {
    density.PointwiseLogLikelihood(
        draws.Theta(s),
        std::span<double>(ll.values).subspan(static_cast<std::size_t>(s) * model.n_obs(),
                                              model.n_obs()));
  }
  return ll;
}

PointwiseLogLik PointwiseLoglik(const ModelSpec& spec, const Dataset& ds,
                                const PosteriorDraws& draws) {
  const Model model(spec, ds);
  return PointwiseLoglik(model, draws);
}

WaicResult Waic(const PointwiseLogLik& ll) {
  RequireDraws(ll);
  WaicResult r;
  const double log_s = std::log(static_cast<double>(ll.draws));
  for (int i = 0; i < ll.obs; ++i) {
    const auto col = ll.Column(i);
    const double lppd = LogSumExp(col) - log_s;
    // Population variance over draws, so duplicating draws changes nothing.
    const double mean =
        std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    var /= static_cast<double>(col.size());
    r.pointwise.push_back(lppd - var);
    r.p_eff += var;
  }
  r.elpd = std::accumulate(r.pointwise.begin(), r.pointwise.end(), 0.0);
  r.se = SeOfSum(r.pointwise);
  return r;
}

double GpdQuantile(double p, double k, double sigma) {
  if (std::abs(k) < 1e-12) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

GpdFit FitGpd(std::vector<double> x, bool shrink) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorKind::kTooFewDraws, "GPD fit needs 2 exceedances");
  constexpr double kPrior = 3.0;
  const std::size_t m = 30 + static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const double x_star = x[static_cast<std::size_t>(std::floor(n / 4.0 + 0.5)) - 1];
  std::vector<double> theta(m), log_lik(m);
  for (std::size_t j = 0; j < m; ++j) {
    theta[j] = 1.0 / x[n - 1] +
               (1.0 - std::sqrt(static_cast<double>(m) / (static_cast<double>(j) + 0.5))) /
                   kPrior / x_star;
    double k = 0.0;
    for (double v : x) k += std::log1p(-theta[j] * v);
    k /= static_cast<double>(n);
    log_lik[j] = static_cast<double>(n) * (std::log(-theta[j] / k) - k - 1.0);
  }
  const double lse = LogSumExp(log_lik);
  double theta_hat = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double w = std::exp(log_lik[j] - lse);
    if (std::isfinite(w)) theta_hat += theta[j] * w;
  }
  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= static_cast<double>(n);
  GpdFit fit;
  fit.sigma = -k / theta_hat;
  if (shrink) {
    const double nd = static_cast<double>(n);
    k = k * nd / (nd + 10.0) + 10.0 * 0.5 / (nd + 10.0);
  }
  fit.k = std::isnan(k) ? std::numeric_limits<double>::infinity() : k;
  return fit;
}

PsisWeights PsisSmooth(const std::vector<double>& log_ratios) {
  const std::size_t s = log_ratios.size();
  PsisWeights out;
  const double max_lr = *std::max_element(log_ratios.begin(), log_ratios.end());
  out.log_weights.resize(s);
  for (std::size_t i = 0; i < s; ++i) out.log_weights[i] = log_ratios[i] - max_lr;

  const auto tail_len = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(s)));
  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.log_weights[a] < out.log_weights[b];
  });
  if (tail_len < 5 || tail_len >= s) {
    out.degenerate = true;
    out.k = kNaN;
    return out;
  }
  const double cutoff = out.log_weights[order[s - tail_len - 1]];
  const double exp_cutoff = std::exp(cutoff);
  std::vector<double> exceed;
  for (std::size_t z = s - tail_len; z < s; ++z) {
    exceed.push_back(std::exp(out.log_weights[order[z]]) - exp_cutoff);
  }
  if (!(exceed.back() > 0.0) || exceed.front() == exceed.back()) {
    out.degenerate = true;
    out.k = kNaN;
    return out;
  }
  const GpdFit fit = FitGpd(exceed);
  out.k = fit.k;
  if (std::isfinite(fit.k)) {
    for (std::size_t z = 0; z < tail_len; ++z) {
      const double p = (static_cast<double>(z + 1) - 0.5) / static_cast<double>(tail_len);
      const double smoothed = std::log(GpdQuantile(p, fit.k, fit.sigma) + exp_cutoff);
      // Truncate at the raw maximum, which is 0 after normalization.
      out.log_weights[order[s - tail_len + z]] = std::min(smoothed, 0.0);
    }
  }
  return out;
}

LooResult PsisLoo(const PointwiseLogLik& ll) {
  RequireDraws(ll);
  LooResult r;
  double lppd_total = 0.0;
  const double log_s = std::log(static_cast<double>(ll.draws));
  for (int i = 0; i < ll.obs; ++i) {
    const auto col = ll.Column(i);
    lppd_total += LogSumExp(col) - log_s;
    const bool constant =
        std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; });
    if (constant) {
      r.pointwise.push_back(col[0]);
      r.pareto_k.push_back(kNaN);
      r.degenerate.push_back(true);
      continue;
    }
    std::vector<double> neg(col.size());
    for (std::size_t s = 0; s < col.size(); ++s) neg[s] = -col[s];
    const auto w = PsisSmooth(neg);
    std::vector<double> num(col.size());
    for (std::size_t s = 0; s < col.size(); ++s) num[s] = w.log_weights[s] + col[s];
    r.pointwise.push_back(LogSumExp(num) - LogSumExp(w.log_weights));
    r.pareto_k.push_back(w.k);
    r.degenerate.push_back(w.degenerate);
    if (!w.degenerate && !(w.k <= kParetoKThreshold)) ++r.n_high_k;
  }
  r.elpd = std::accumulate(r.pointwise.begin(), r.pointwise.end(), 0.0);
  r.p_eff = lppd_total - r.elpd;
  r.se = SeOfSum(r.pointwise);
  return r;
}

ComparisonReport CompareModels(const std::vector<ModelFit>& fits) {
  if (fits.empty()) throw Error(ErrorKind::kInvalidConfig, "no models to compare");
  for (const auto& f : fits) {
    if (f.fingerprint != fits[0].fingerprint) {
      throw Error(ErrorKind::kDatasetMismatch,
                  "models '" + fits[0].name + "' and '" + f.name +
                      "' were fitted to different datasets");
    }
    if (f.loo.pointwise.size() != fits[0].loo.pointwise.size()) {
      throw Error(ErrorKind::kDatasetMismatch, "observation counts differ");
    }
  }
  std::vector<std::size_t> order(fits.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fits[a].loo.elpd != fits[b].loo.elpd) return fits[a].loo.elpd > fits[b].loo.elpd;
    return fits[a].name < fits[b].name;
  });
  ComparisonReport report;
  report.fingerprint = fits[0].fingerprint;
  const ModelFit& best = fits[order[0]];
  for (const std::size_t idx : order) {
    const ModelFit& f = fits[idx];
    ComparisonEntry e;
    e.name = f.name;
    e.elpd_loo = f.loo.elpd;
    e.se_loo = f.loo.se;
    e.p_loo = f.loo.p_eff;
    e.elpd_waic = f.waic.elpd;
    e.se_waic = f.waic.se;
    e.p_waic = f.waic.p_eff;
    e.n_high_k = f.loo.n_high_k;
    std::vector<double> diff(f.loo.pointwise.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
      diff[i] = f.loo.pointwise[i] - best.loo.pointwise[i];
    }
    e.delta_elpd = std::accumulate(diff.begin(), diff.end(), 0.0);
    e.delta_se = SeOfSum(diff);
    report.ranking.push_back(std::move(e));
  }
  return report;
}

void to_json(nlohmann::json& j, const WaicResult& w) {
  j = nlohmann::json{{"elpd", w.elpd}, {"p_eff", w.p_eff}, {"se", w.se}};
}

void to_json(nlohmann::json& j, const LooResult& l) {
  nlohmann::json ks = nlohmann::json::array();
  for (double k : l.pareto_k) ks.push_back(NullIfNaN(k));
  j = nlohmann::json{{"elpd", l.elpd},
                     {"p_eff", l.p_eff},
                     {"se", l.se},
                     {"pareto_k", std::move(ks)},
                     {"pareto_k_threshold", kParetoKThreshold},
                     {"n_high_k", l.n_high_k},
                     {"n_degenerate",
                      std::count(l.degenerate.begin(), l.degenerate.end(), true)}};
}

void to_json(nlohmann::json& j, const ComparisonReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t rank = 0; rank < r.ranking.size(); ++rank) {
    const auto& e = r.ranking[rank];
    rows.push_back({{"rank", rank + 1},
                    {"model", e.name},
                    {"elpd_loo", e.elpd_loo},
                    {"se_loo", e.se_loo},
                    {"p_loo", e.p_loo},
                    {"elpd_waic", e.elpd_waic},
                    {"se_waic", e.se_waic},
                    {"p_waic", e.p_waic},
                    {"n_high_pareto_k", e.n_high_k},
                    {"delta_elpd", e.delta_elpd},
                    {"delta_se", e.delta_se}});
  }
  j = nlohmann::json{{"fingerprint", r.fingerprint}, {"ranking", std::move(rows)}};
}

std::string ToCsv(const ComparisonReport& r) {
  std::ostringstream out;
  out << "model,elpd_loo,se_loo,elpd_waic,se_waic,delta_elpd,delta_se\n";
  for (const auto& e : r.ranking) {
    out << e.name << ',' << Num(e.elpd_loo) << ',' << Num(e.se_loo) << ','
        << Num(e.elpd_waic) << ',' << Num(e.se_waic) << ',' << Num(e.delta_elpd)
        << ',' << Num(e.delta_se) << '\n';
  }
  return out.str();
}

}  // namespace grader_audit
