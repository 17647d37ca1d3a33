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

#include "grader_audit/likelihoods.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "grader_audit/error.hpp"

namespace grader_audit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.91893853320467274178;

bool PositiveSupport(PriorFamily family) {
  return family != PriorFamily::kNormal;
}

double PriorCore(const ModelSpec& spec, const ParameterLayout& layout,
                 std::span<const double> theta, std::span<double> grad,
                 std::string* where) {
  const bool want_grad = !grad.empty();
  double total = 0.0;
  const auto add = [&](const Prior& prior, std::size_t index) {
    double d = 0.0;
    total += PriorLogDensity(prior, theta[index], d);
    if (want_grad) grad[index] += d;
  };
  for (const Block& b : layout.blocks()) {
    const auto off = static_cast<std::size_t>(b.offset);
    const auto size = static_cast<std::size_t>(b.size);
    switch (b.kind) {
      case BlockKind::kIntercept:
        add(spec.intercept_prior, off);
        break;
      case BlockKind::kCoefficients: {
        const Term& term = spec.terms[static_cast<std::size_t>(b.term)];
        if (!term.hierarchical()) {
          for (std::size_t k = 0; k < size; ++k) add(term.prior, off + k);
          break;
        }
        const TermLayout& tl = layout.terms()[static_cast<std::size_t>(b.term)];
        const auto mu_off = static_cast<std::size_t>(
            layout.blocks()[static_cast<std::size_t>(tl.hyper_mean)].offset);
        const auto sd_off = static_cast<std::size_t>(
            layout.blocks()[static_cast<std::size_t>(tl.hyper_scale)].offset);
        for (std::size_t k = 0; k < size; ++k) {
          const auto g = static_cast<std::size_t>(tl.group_of[k]);
          const double mu = theta[mu_off + g];
          const double sd = theta[sd_off + g];
          if (!(sd > 0.0)) {
            if (where != nullptr) *where = "prior of block " + b.name;
            return kNegInf;
          }
          const double z = (theta[off + k] - mu) / sd;
          total += -kHalfLog2Pi - std::log(sd) - 0.5 * z * z;
          if (want_grad) {
            grad[off + k] += -z / sd;
            grad[mu_off + g] += z / sd;
            grad[sd_off + g] += -1.0 / sd + z * z / sd;
          }
        }
        break;
      }
      case BlockKind::kHyperMean: {
        const Term& term = spec.terms[static_cast<std::size_t>(b.term)];
        for (std::size_t k = 0; k < size; ++k) {
          add(term.hyper_mean_prior, off + k);
        }
        break;
      }
      case BlockKind::kHyperScale: {
        const Term& term = spec.terms[static_cast<std::size_t>(b.term)];
        for (std::size_t k = 0; k < size; ++k) {
          add(term.hyper_scale_prior, off + k);
        }
        break;
      }
      case BlockKind::kCutpoints: {
        const auto& cp = spec.cutpoint_prior;
        add(cp.first, off);
        for (std::size_t j = 1; j < size; ++j) {
          const double raw = theta[off + j] - theta[off + j - 1] - cp.shift;
          double d = 0.0;
          total += PriorLogDensity(cp.difference, raw, d);
          if (want_grad) {
            grad[off + j] += d;
            grad[off + j - 1] -= d;
          }
        }
        break;
      }
    }
    if (!std::isfinite(total)) {
      if (where != nullptr) *where = "prior of block " + b.name;
      return total;
    }
  }
  return total;
}

// Accumulates sum_k counts[k] * log p(k | phi) and d/dphi, d/dc.
double CellOrdered(const std::vector<double>& counts, double phi,
                   std::span<const double> cuts, double& d_phi,
                   std::span<double> d_cuts) {
  double total = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double n = counts[k];
    if (n == 0.0) continue;
    const auto t =
        OrderedLogisticLogPmfGrad(static_cast<int>(k) + 1, phi, cuts);
    total += n * t.log_prob;
    d_phi += n * t.d_phi;
    if (!d_cuts.empty()) {
      if (t.lower >= 0) d_cuts[static_cast<std::size_t>(t.lower)] += n * t.d_lower;
      if (t.upper >= 0) d_cuts[static_cast<std::size_t>(t.upper)] += n * t.d_upper;
    }
  }
  return total;
}

double CellBernoulli(const std::vector<double>& counts, double eta,
                     double& d_eta) {
  const double n0 = counts[0];
  const double n1 = counts[1];
  d_eta += n1 * InvLogit(-eta) - n0 * InvLogit(eta);
  return n1 * LogInvLogit(eta) + n0 * LogInvLogit(-eta);
}

}  // namespace

double InvLogit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double LogInvLogit(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double Log1mExp(double x) {
  if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

OrderedLogisticTerms OrderedLogisticLogPmfGrad(
    int score, double phi, std::span<const double> cutpoints) {
  const int k_max = static_cast<int>(cutpoints.size()) + 1;
  if (score < 1 || score > k_max) {
    throw Error(ErrorKind::kInvalidScore,
                "score " + std::to_string(score) + " outside 1.." +
                    std::to_string(k_max));
  }
  OrderedLogisticTerms t;
  if (k_max == 1) return t;
  if (score == 1) {
    const double a = cutpoints[0] - phi;
    t.log_prob = LogInvLogit(a);
    t.upper = 0;
    t.d_upper = InvLogit(-a);
    t.d_phi = -t.d_upper;
    return t;
  }
  if (score == k_max) {
    const double b = cutpoints[static_cast<std::size_t>(k_max - 2)] - phi;
    t.log_prob = LogInvLogit(-b);
    t.lower = k_max - 2;
    t.d_lower = -InvLogit(b);
    t.d_phi = -t.d_lower;
    return t;
  }
  // P = inv_logit(a) - inv_logit(b) = inv_logit(a) inv_logit(-b) (1 - e^(b-a))
  const double a = cutpoints[static_cast<std::size_t>(score - 1)] - phi;
  const double b = cutpoints[static_cast<std::size_t>(score - 2)] - phi;
  const double log_gap = Log1mExp(b - a);
  const double log_sa = LogInvLogit(a);
  const double log_smb = LogInvLogit(-b);
  t.log_prob = log_sa + log_smb + log_gap;
  t.upper = score - 1;
  t.lower = score - 2;
  t.d_upper = std::exp(LogInvLogit(-a) - log_smb - log_gap);
  t.d_lower = -std::exp(LogInvLogit(b) - log_sa - log_gap);
  t.d_phi = -(t.d_upper + t.d_lower);
  return t;
}

double OrderedLogisticLogPmf(int score, double phi,
                             std::span<const double> cutpoints) {
  return OrderedLogisticLogPmfGrad(score, phi, cutpoints).log_prob;
}

double BernoulliLogitLogPmf(int y, double eta) {
  return y == 1 ? LogInvLogit(eta) : LogInvLogit(-eta);
}

CutpointTransform CutpointsFromUnconstrained(std::span<const double> z,
                                             double shift) {
  CutpointTransform out;
  out.cutpoints.resize(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (j == 0) {
      out.cutpoints[0] = z[0];
    } else {
      out.cutpoints[j] = out.cutpoints[j - 1] + std::exp(z[j]) + shift;
      out.log_jacobian += z[j];
    }
  }
  return out;
}

std::vector<double> CutpointsToUnconstrained(std::span<const double> cutpoints,
                                             double shift) {
  std::vector<double> z(cutpoints.size());
  for (std::size_t j = 0; j < cutpoints.size(); ++j) {
    z[j] = j == 0 ? cutpoints[0]
                  : std::log(cutpoints[j] - cutpoints[j - 1] - shift);
  }
  return z;
}

double PriorLogDensity(const Prior& prior, double x, double& derivative) {
  const double s = prior.scale;
  derivative = 0.0;
  if (PositiveSupport(prior.family) && !(x > 0.0)) return kNegInf;
  switch (prior.family) {
    case PriorFamily::kNormal: {
      const double z = (x - prior.location) / s;
      derivative = -z / s;
      return -kHalfLog2Pi - std::log(s) - 0.5 * z * z;
    }
    case PriorFamily::kHalfNormal: {
      const double z = x / s;
      derivative = -z / s;
      return std::numbers::ln2 - kHalfLog2Pi - std::log(s) - 0.5 * z * z;
    }
    case PriorFamily::kHalfCauchy: {
      derivative = -2.0 * x / (s * s + x * x);
      return std::log(2.0 / std::numbers::pi) - std::log(s) -
             std::log1p((x / s) * (x / s));
    }
    case PriorFamily::kLogNormal: {
      const double lx = std::log(x);
      const double z = (lx - prior.location) / s;
      derivative = -1.0 / x - z / (s * x);
      return -lx - kHalfLog2Pi - std::log(s) - 0.5 * z * z;
    }
  }
  return kNegInf;
}

double PriorLogDensity(const Prior& prior, double x) {
  double unused = 0.0;
  return PriorLogDensity(prior, x, unused);
}

double PriorLogPdf(const ParameterVector& params, const ModelSpec& spec) {
  const auto& layout = params.layout();
  const auto theta = params.values();
  for (const Block& b : layout.blocks()) {
    if (b.kind == BlockKind::kHyperScale) {
      for (int k = 0; k < b.size; ++k) {
        if (!(theta[static_cast<std::size_t>(b.offset + k)] > 0.0)) {
          throw Error(ErrorKind::kNonPositiveScale,
                      b.names[static_cast<std::size_t>(k)] + " must be > 0");
        }
      }
    }
    if (b.kind == BlockKind::kCutpoints) {
      for (int j = 1; j < b.size; ++j) {
        const auto i = static_cast<std::size_t>(b.offset + j);
        if (!(theta[i] - theta[i - 1] > spec.cutpoint_prior.shift)) {
          throw Error(ErrorKind::kShapeMismatch,
                      "cutpoint gaps must exceed the shift constant");
        }
      }
    }
  }
  return PriorCore(spec, layout, theta, {}, nullptr);
}

namespace {

// Hierarchical members are non-centred: the sampler moves eta ~ N(0, 1) and
// theta = mu + sigma * eta. Calls f(member, mu, sigma) offsets per member.
template <typename F>
void ForEachMember(const ParameterLayout& layout, F&& f) {
  for (const TermLayout& tl : layout.terms()) {
    if (tl.hyper_mean < 0) continue;
    const Block& coef = layout.blocks()[static_cast<std::size_t>(tl.coefficients)];
    const auto mu_off = static_cast<std::size_t>(
        layout.blocks()[static_cast<std::size_t>(tl.hyper_mean)].offset);
    const auto sd_off = static_cast<std::size_t>(
        layout.blocks()[static_cast<std::size_t>(tl.hyper_scale)].offset);
    for (int k = 0; k < coef.size; ++k) {
      const auto g = static_cast<std::size_t>(tl.group_of[static_cast<std::size_t>(k)]);
      f(static_cast<std::size_t>(coef.offset + k), mu_off + g, sd_off + g);
    }
  }
}

}  // namespace

std::vector<double> Constrain(const Model& model, std::span<const double> u,
                              double* log_jacobian) {
  const auto& layout = model.layout();
  std::vector<double> theta(u.begin(), u.end());
  double lj = 0.0;
  for (const Block& b : layout.blocks()) {
    const auto off = static_cast<std::size_t>(b.offset);
    if (b.kind == BlockKind::kHyperScale) {
      for (int k = 0; k < b.size; ++k) {
        theta[off + static_cast<std::size_t>(k)] =
            std::exp(u[off + static_cast<std::size_t>(k)]);
        lj += u[off + static_cast<std::size_t>(k)];
      }
    } else if (b.kind == BlockKind::kCutpoints) {
      auto ct = CutpointsFromUnconstrained(
          u.subspan(off, static_cast<std::size_t>(b.size)),
          model.spec().cutpoint_prior.shift);
      std::copy(ct.cutpoints.begin(), ct.cutpoints.end(), theta.begin() + b.offset);
      lj += ct.log_jacobian;
    }
  }
  ForEachMember(layout, [&](std::size_t k, std::size_t mu, std::size_t sd) {
    theta[k] = theta[mu] + theta[sd] * u[k];
    lj += u[sd];
  });
  if (log_jacobian != nullptr) *log_jacobian = lj;
  return theta;
}

std::vector<double> Unconstrain(const Model& model,
                                std::span<const double> theta) {
  const auto& layout = model.layout();
  std::vector<double> u(theta.begin(), theta.end());
  for (const Block& b : layout.blocks()) {
    const auto off = static_cast<std::size_t>(b.offset);
    if (b.kind == BlockKind::kHyperScale) {
      for (int k = 0; k < b.size; ++k) {
        u[off + static_cast<std::size_t>(k)] =
            std::log(theta[off + static_cast<std::size_t>(k)]);
      }
    } else if (b.kind == BlockKind::kCutpoints) {
      const auto z = CutpointsToUnconstrained(
          theta.subspan(off, static_cast<std::size_t>(b.size)),
          model.spec().cutpoint_prior.shift);
      std::copy(z.begin(), z.end(), u.begin() + b.offset);
    }
  }
  ForEachMember(layout, [&](std::size_t k, std::size_t mu, std::size_t sd) {
    u[k] = (theta[k] - theta[mu]) / theta[sd];
  });
  return u;
}

double JointDensity::Evaluate(std::span<const double> u,
                              std::span<double> gradient,
                              std::string* where) const {
  const Model& m = *model_;
  const auto& layout = m.layout();
  const auto dim = static_cast<std::size_t>(layout.dim());
  double log_jac = 0.0;
  const std::vector<double> theta = Constrain(m, u, &log_jac);
  std::vector<double> g_theta(dim, 0.0);

  const std::vector<double> cuts = m.Cutpoints(theta);
  std::vector<double> g_cuts(cuts.size(), 0.0);
  const bool ordered = m.spec().ordered();

  double loglik = 0.0;
  const auto& cells = m.cells();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    double phi = 0.0;
    for (std::size_t k = 0; k < cell.row.index.size(); ++k) {
      phi += cell.row.weight[k] *
             theta[static_cast<std::size_t>(cell.row.index[k])];
    }
    double d_phi = 0.0;
    const double ll = ordered ? CellOrdered(cell.counts, phi, cuts, d_phi, g_cuts)
                              : CellBernoulli(cell.counts, phi, d_phi);
    if (!std::isfinite(ll) || !std::isfinite(d_phi)) {
      if (where != nullptr) *where = "log-likelihood of cell " + std::to_string(c);
      return std::numeric_limits<double>::quiet_NaN();
    }
    loglik += ll;
    for (std::size_t k = 0; k < cell.row.index.size(); ++k) {
      g_theta[static_cast<std::size_t>(cell.row.index[k])] +=
          cell.row.weight[k] * d_phi;
    }
  }

  const double prior = PriorCore(m.spec(), layout, theta, g_theta, where);
  if (!std::isfinite(prior)) return prior;

  // Chain rule to the unconstrained scale, plus the Jacobian terms.
  // Non-centred members first: they feed mu and sigma.
  ForEachMember(layout, [&](std::size_t k, std::size_t mu, std::size_t sd) {
    g_theta[mu] += g_theta[k];
    g_theta[sd] += g_theta[k] * u[k];
    g_theta[k] *= theta[sd];
    // d(log sigma)/du_sd, divided by sigma since the scale step multiplies it back.
    g_theta[sd] += 1.0 / theta[sd];
  });
  std::copy(g_theta.begin(), g_theta.end(), gradient.begin());
  for (const Block& b : layout.blocks()) {
    const auto off = static_cast<std::size_t>(b.offset);
    const auto size = static_cast<std::size_t>(b.size);
    if (b.kind == BlockKind::kHyperScale) {
      for (std::size_t k = 0; k < size; ++k) {
        gradient[off + k] = g_theta[off + k] * theta[off + k] + 1.0;
      }
    } else if (b.kind == BlockKind::kCutpoints) {
      // g_cuts carries the likelihood part; the prior part is in g_theta.
      std::vector<double> g_c(size);
      for (std::size_t j = 0; j < size; ++j) g_c[j] = g_theta[off + j] + g_cuts[j];
      double tail = 0.0;
      for (std::size_t j = size; j-- > 0;) {
        tail += g_c[j];
        gradient[off + j] = j == 0 ? tail : tail * std::exp(u[off + j]) + 1.0;
      }
    }
  }
  const double value = loglik + prior + log_jac;
  if (!std::isfinite(value) && where != nullptr) *where = "log-Jacobian";
  return value;
}

double JointDensity::LogLikelihood(std::span<const double> theta) const {
  const Model& m = *model_;
  const std::vector<double> cuts = m.Cutpoints(theta);
  double total = 0.0;
  for (const auto& cell : m.cells()) {
    double phi = 0.0;
    for (std::size_t k = 0; k < cell.row.index.size(); ++k) {
      phi += cell.row.weight[k] *
             theta[static_cast<std::size_t>(cell.row.index[k])];
    }
    double unused = 0.0;
    total += m.spec().ordered() ? CellOrdered(cell.counts, phi, cuts, unused, {})
                                : CellBernoulli(cell.counts, phi, unused);
  }
  return total;
}

double JointDensity::LogPrior(std::span<const double> theta) const {
  return PriorCore(model_->spec(), model_->layout(), theta, {}, nullptr);
}

void JointDensity::PointwiseLogLikelihood(std::span<const double> theta,
                                          std::span<double> out) const {
  const Model& m = *model_;
  const std::vector<double> cuts = m.Cutpoints(theta);
  const auto& cells = m.cells();
  // Per-cell log probability of every outcome, filled lazily.
  std::vector<std::vector<double>> cache(cells.size());
  for (std::size_t i = 0; i < m.n_obs(); ++i) {
    const std::size_t c = m.cell_of(i);
    auto& probs = cache[c];
    if (probs.empty()) {
      const auto& row = cells[c].row;
      double phi = 0.0;
      for (std::size_t k = 0; k < row.index.size(); ++k) {
        phi += row.weight[k] * theta[static_cast<std::size_t>(row.index[k])];
      }
      probs.resize(static_cast<std::size_t>(m.n_outcomes()));
      for (int k = 0; k < m.n_outcomes(); ++k) {
        probs[static_cast<std::size_t>(k)] =
            m.spec().ordered() ? OrderedLogisticLogPmf(k + 1, phi, cuts)
                               : BernoulliLogitLogPmf(k, phi);
      }
    }
    const int slot = m.spec().ordered() ? m.outcome(i) - 1 : m.outcome(i);
    out[i] = probs[static_cast<std::size_t>(slot)];
  }
}

DensityResult JointLogDensity(const Model& model, std::span<const double> u) {
  JointDensity density(model);
  if (static_cast<int>(u.size()) != density.dim()) {
    throw Error(ErrorKind::kShapeMismatch,
                "unconstrained vector has " + std::to_string(u.size()) +
                    " entries, model dimension is " +
                    std::to_string(density.dim()));
  }
  DensityResult out;
  out.gradient.assign(u.size(), 0.0);
  std::string where;
  out.value = density.Evaluate(u, out.gradient, &where);
  if (!std::isfinite(out.value)) {
    throw Error(ErrorKind::kNonFiniteDensity,
                "non-finite value in " + (where.empty() ? "density" : where));
  }
  return out;
}

}  // namespace grader_audit
