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

#include "grader_audit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "grader_audit/error.hpp"
#include "grader_audit/likelihoods.hpp"

namespace grader_audit {

namespace {

constexpr double kMaxEnergyError = 1000.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Dual-averaging constants.
constexpr double kGamma = 0.05;
constexpr double kT0 = 10.0;
constexpr double kKappa = 0.75;

double LogSumExp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

class ModelTarget final : public LogDensityTarget {
 public:
  explicit ModelTarget(const Model& model) : density_(model) {}
  int dim() const override { return density_.dim(); }
  double Evaluate(std::span<const double> u, std::span<double> gradient,
                  std::string* where) const override {
    return density_.Evaluate(u, gradient, where);
  }

 private:
  JointDensity density_;
};

struct PhasePoint {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> g;
  double log_density = 0.0;
};

class Nuts {
 public:
  Nuts(const LogDensityTarget& target, Rng& rng, int max_depth)
      : target_(target),
        rng_(rng),
        dim_(static_cast<std::size_t>(target.dim())),
        max_depth_(max_depth),
        inv_metric_(dim_, 1.0) {}

  void Init(std::vector<double> q) {
    z_.q = std::move(q);
    z_.p.assign(dim_, 0.0);
    z_.g.assign(dim_, 0.0);
    std::string where;
    z_.log_density = target_.Evaluate(z_.q, z_.g, &where);
    bool grad_ok = std::all_of(z_.g.begin(), z_.g.end(),
                               [](double v) { return std::isfinite(v); });
    if (!std::isfinite(z_.log_density) || !grad_ok) {
      throw Error(ErrorKind::kNonFiniteAtInit,
                  "log density not finite at the initial point" +
                      (where.empty() ? std::string() : " (" + where + ")"));
    }
  }

  const std::vector<double>& position() const { return z_.q; }
  double step_size() const { return epsilon_; }
  void set_step_size(double e) { epsilon_ = e; }
  std::vector<double>& inv_metric() { return inv_metric_; }

  // Stan-style heuristic: double or halve until the one-step acceptance
  // crosses 0.8.
  void InitStepSize() {
    const PhasePoint start = z_;
    SampleMomentum();
    const double h0 = Hamiltonian(z_);
    Leapfrog(z_, epsilon_);
    double delta = h0 - Hamiltonian(z_);
    if (!std::isfinite(delta)) delta = -kInf;
    const int direction = delta > std::log(0.8) ? 1 : -1;
    for (int iter = 0; iter < 100; ++iter) {
      z_ = start;
      SampleMomentum();
      const double h = Hamiltonian(z_);
      Leapfrog(z_, epsilon_);
      double d = h - Hamiltonian(z_);
      if (!std::isfinite(d)) d = -kInf;
      if (direction == 1 && !(d > std::log(0.8))) break;
      if (direction == -1 && !(d < std::log(0.8))) break;
      epsilon_ = direction == 1 ? 2.0 * epsilon_ : 0.5 * epsilon_;
      if (epsilon_ > 1e7 || epsilon_ < 1e-10) break;
    }
    z_ = start;
  }

  struct Transition {
    double accept_stat = 0.0;
    int n_leapfrog = 0;
    bool divergent = false;
  };

  Transition Step() {
    SampleMomentum();
    PhasePoint z_fwd = z_;
    PhasePoint z_bck = z_;
    PhasePoint z_sample = z_;
    PhasePoint z_propose = z_;

    std::vector<double> p_fwd_fwd = z_.p, p_fwd_bck = z_.p;
    std::vector<double> p_bck_fwd = z_.p, p_bck_bck = z_.p;
    std::vector<double> ps_fwd_fwd = Sharp(z_.p), ps_fwd_bck = ps_fwd_fwd;
    std::vector<double> ps_bck_fwd = ps_fwd_fwd, ps_bck_bck = ps_fwd_fwd;
    std::vector<double> rho = z_.p;

    double log_sum_weight = 0.0;
    const double h0 = Hamiltonian(z_);
    int n_leapfrog = 0;
    double sum_metro = 0.0;
    divergent_ = false;

    for (int depth = 0; depth < max_depth_; ++depth) {
      std::vector<double> rho_fwd(dim_, 0.0), rho_bck(dim_, 0.0);
      double lsw_subtree = -kInf;
      bool valid = false;
      if (rng_.Uniform() > 0.5) {
        work_ = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        ps_bck_fwd = ps_fwd_bck;
        valid = BuildTree(depth, z_propose, ps_fwd_bck, ps_fwd_fwd, rho_fwd,
                          p_fwd_bck, p_fwd_fwd, h0, 1.0, n_leapfrog,
                          lsw_subtree, sum_metro);
        z_fwd = work_;
      } else {
        work_ = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        ps_fwd_bck = ps_bck_fwd;
        valid = BuildTree(depth, z_propose, ps_bck_fwd, ps_bck_bck, rho_bck,
                          p_bck_fwd, p_bck_bck, h0, -1.0, n_leapfrog,
                          lsw_subtree, sum_metro);
        z_bck = work_;
      }
      if (!valid) break;

      if (lsw_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (rng_.Uniform() < std::exp(lsw_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = LogSumExp(log_sum_weight, lsw_subtree);

      for (std::size_t i = 0; i < dim_; ++i) rho[i] = rho_bck[i] + rho_fwd[i];
      bool persist = Criterion(ps_bck_bck, ps_fwd_fwd, rho);
      std::vector<double> ext(dim_);
      for (std::size_t i = 0; i < dim_; ++i) ext[i] = rho_bck[i] + p_fwd_bck[i];
      persist = persist && Criterion(ps_bck_bck, ps_fwd_bck, ext);
      for (std::size_t i = 0; i < dim_; ++i) ext[i] = rho_fwd[i] + p_bck_fwd[i];
      persist = persist && Criterion(ps_bck_fwd, ps_fwd_fwd, ext);
      if (!persist) break;
    }
    z_ = z_sample;
    Transition t;
    t.n_leapfrog = n_leapfrog;
    t.accept_stat = n_leapfrog > 0 ? sum_metro / n_leapfrog : 0.0;
    t.divergent = divergent_;
    return t;
  }

 private:
  void SampleMomentum() {
    for (std::size_t i = 0; i < dim_; ++i) {
      z_.p[i] = rng_.Normal() / std::sqrt(inv_metric_[i]);
    }
  }

  std::vector<double> Sharp(const std::vector<double>& p) const {
    std::vector<double> out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = inv_metric_[i] * p[i];
    return out;
  }

  double Hamiltonian(const PhasePoint& z) const {
    double kinetic = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      kinetic += z.p[i] * z.p[i] * inv_metric_[i];
    }
    const double h = -z.log_density + 0.5 * kinetic;
    return std::isnan(h) ? kInf : h;
  }

  void Leapfrog(PhasePoint& z, double eps) const {
    for (std::size_t i = 0; i < dim_; ++i) z.p[i] += 0.5 * eps * z.g[i];
    for (std::size_t i = 0; i < dim_; ++i) z.q[i] += eps * inv_metric_[i] * z.p[i];
    z.log_density = target_.Evaluate(z.q, z.g, nullptr);
    if (!std::isfinite(z.log_density)) {
      z.log_density = -kInf;
      return;
    }
    for (std::size_t i = 0; i < dim_; ++i) z.p[i] += 0.5 * eps * z.g[i];
  }

  static bool Criterion(const std::vector<double>& p_sharp_minus,
                        const std::vector<double>& p_sharp_plus,
                        const std::vector<double>& rho) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      a += p_sharp_plus[i] * rho[i];
      b += p_sharp_minus[i] * rho[i];
    }
    return a > 0.0 && b > 0.0;
  }

  bool BuildTree(int depth, PhasePoint& z_propose, std::vector<double>& ps_beg,
                 std::vector<double>& ps_end, std::vector<double>& rho,
                 std::vector<double>& p_beg, std::vector<double>& p_end,
                 double h0, double sign, int& n_leapfrog,
                 double& log_sum_weight, double& sum_metro) {
    if (depth == 0) {
      Leapfrog(work_, sign * epsilon_);
      ++n_leapfrog;
      double h = Hamiltonian(work_);
      if (!std::isfinite(h)) h = kInf;
      if (h - h0 > kMaxEnergyError) divergent_ = true;
      log_sum_weight = LogSumExp(log_sum_weight, h0 - h);
      sum_metro += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
      z_propose = work_;
      ps_beg = Sharp(work_.p);
      ps_end = ps_beg;
      for (std::size_t i = 0; i < dim_; ++i) rho[i] += work_.p[i];
      p_beg = work_.p;
      p_end = p_beg;
      return !divergent_;
    }

    std::vector<double> rho_left(dim_, 0.0);
    std::vector<double> p_init_end(dim_), ps_init_end(dim_);
    double lsw_left = -kInf;
    if (!BuildTree(depth - 1, z_propose, ps_beg, ps_init_end, rho_left, p_beg,
                   p_init_end, h0, sign, n_leapfrog, lsw_left, sum_metro)) {
      return false;
    }

    PhasePoint z_propose_final = work_;
    std::vector<double> rho_right(dim_, 0.0);
    std::vector<double> p_final_beg(dim_), ps_final_beg(dim_);
    double lsw_right = -kInf;
    if (!BuildTree(depth - 1, z_propose_final, ps_final_beg, ps_end, rho_right,
                   p_final_beg, p_end, h0, sign, n_leapfrog, lsw_right,
                   sum_metro)) {
      return false;
    }

    const double lsw_subtree = LogSumExp(lsw_left, lsw_right);
    log_sum_weight = LogSumExp(log_sum_weight, lsw_subtree);
    if (lsw_right > lsw_subtree) {
      z_propose = z_propose_final;
    } else if (rng_.Uniform() < std::exp(lsw_right - lsw_subtree)) {
      z_propose = z_propose_final;
    }

    std::vector<double> rho_subtree(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      rho_subtree[i] = rho_left[i] + rho_right[i];
      rho[i] += rho_subtree[i];
    }
    bool persist = Criterion(ps_beg, ps_end, rho_subtree);
    std::vector<double> ext(dim_);
    for (std::size_t i = 0; i < dim_; ++i) ext[i] = rho_left[i] + p_final_beg[i];
    persist = persist && Criterion(ps_beg, ps_final_beg, ext);
    for (std::size_t i = 0; i < dim_; ++i) ext[i] = rho_right[i] + p_init_end[i];
    persist = persist && Criterion(ps_init_end, ps_end, ext);
    return persist;
  }

  const LogDensityTarget& target_;
  Rng& rng_;
  std::size_t dim_;
  int max_depth_;
  double epsilon_ = 1.0;
  std::vector<double> inv_metric_;
  PhasePoint z_;
  PhasePoint work_;
  bool divergent_ = false;
};

class DualAveraging {
 public:
  explicit DualAveraging(double delta) : delta_(delta) {}
  void Restart(double epsilon) {
    counter_ = 0.0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
    mu_ = std::log(10.0 * epsilon);
  }
  double Update(double accept_stat) {
    counter_ += 1.0;
    accept_stat = std::min(1.0, accept_stat);
    const double eta = 1.0 / (counter_ + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / kGamma;
    const double x_eta = std::pow(counter_, -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }
  double Final() const { return std::exp(x_bar_); }

 private:
  double delta_;
  double counter_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  double mu_ = 0.0;
};

class Welford {
 public:
  explicit Welford(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}
  void Add(const std::vector<double>& x) {
    n_ += 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean_[i];
      mean_[i] += d / n_;
      m2_[i] += d * (x[i] - mean_[i]);
    }
  }
  // Sample variances shrunk toward 1e-3.
  void Regularized(std::vector<double>& out) const {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double var = m2_[i] / (n_ - 1.0);
      out[i] = (n_ / (n_ + 5.0)) * var + 1e-3 * (5.0 / (n_ + 5.0));
    }
  }
  void Reset() {
    n_ = 0.0;
    std::fill(mean_.begin(), mean_.end(), 0.0);
    std::fill(m2_.begin(), m2_.end(), 0.0);
  }

 private:
  double n_ = 0.0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

// Expanding metric windows between a 15% initial and a 10% final buffer.
class WindowSchedule {
 public:
  explicit WindowSchedule(int warmup) : warmup_(warmup) {
    if (warmup < 20) {
      enabled_ = false;
      return;
    }
    init_buffer_ = static_cast<int>(0.15 * warmup);
    term_buffer_ = static_cast<int>(0.10 * warmup);
    window_ = 25;
    const int adapt = warmup - init_buffer_ - term_buffer_;
    if (window_ > adapt) window_ = adapt;
    next_end_ = init_buffer_ + window_ - 1;
    Clamp();
  }
  bool InWindow(int i) const {
    return enabled_ && i >= init_buffer_ && i < warmup_ - term_buffer_ &&
           i != warmup_;
  }
  bool WindowEnds(int i) const { return enabled_ && i == next_end_; }
  void Advance(int i) {
    if (next_end_ == warmup_ - term_buffer_ - 1) {
      next_end_ = -1;
      return;
    }
    window_ *= 2;
    next_end_ = i + window_;
    Clamp();
  }

 private:
  void Clamp() {
    const int last = warmup_ - term_buffer_ - 1;
    if (next_end_ + 2 * window_ > last) next_end_ = last;
  }

  int warmup_;
  bool enabled_ = true;
  int init_buffer_ = 0;
  int term_buffer_ = 0;
  int window_ = 0;
  int next_end_ = -1;
};

ChainResult RunChain(const LogDensityTarget& target, const SamplerConfig& cfg,
                     const std::vector<double>& init, int chain) {
  Rng rng = Rng::ForStream(cfg.seed, static_cast<std::uint64_t>(chain));
  int max_depth = 0;
  while ((2 << max_depth) <= cfg.max_leapfrog_steps) ++max_depth;
  max_depth = std::max(max_depth, 1);
  Nuts nuts(target, rng, max_depth);
  nuts.Init(init);
  nuts.InitStepSize();

  DualAveraging da(cfg.target_accept);
  da.Restart(nuts.step_size());
  const auto dim = static_cast<std::size_t>(target.dim());
  Welford welford(dim);
  WindowSchedule schedule(cfg.warmup_iterations);

  for (int i = 0; i < cfg.warmup_iterations; ++i) {
    const auto t = nuts.Step();
    nuts.set_step_size(da.Update(t.accept_stat));
    if (schedule.InWindow(i)) welford.Add(nuts.position());
    if (schedule.WindowEnds(i)) {
      welford.Regularized(nuts.inv_metric());
      welford.Reset();
      nuts.InitStepSize();
      da.Restart(nuts.step_size());
      schedule.Advance(i);
    }
  }
  if (cfg.warmup_iterations > 0) nuts.set_step_size(da.Final());

  ChainResult out;
  out.draws.reserve(static_cast<std::size_t>(cfg.sampling_iterations) * dim);
  double accept = 0.0;
  double leapfrog = 0.0;
  for (int i = 0; i < cfg.sampling_iterations; ++i) {
    const auto t = nuts.Step();
    if (t.divergent) ++out.divergences;
    accept += t.accept_stat;
    leapfrog += t.n_leapfrog;
    out.draws.insert(out.draws.end(), nuts.position().begin(),
                     nuts.position().end());
  }
  out.step_size = nuts.step_size();
  out.inverse_metric = nuts.inv_metric();
  out.mean_accept = accept / cfg.sampling_iterations;
  out.mean_leapfrog = leapfrog / cfg.sampling_iterations;
  return out;
}

int ThreadCap(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GRADER_AUDIT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct SplitSeries {
  std::vector<std::vector<double>> halves;
};

SplitSeries Split(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) {
    throw Error(ErrorKind::kTooFewDraws, "need at least 2 chains");
  }
  const std::size_t n = chains[0].size();
  for (const auto& c : chains) {
    if (c.size() != n) {
      throw Error(ErrorKind::kShapeMismatch, "chains differ in length");
    }
  }
  if (n < 4) throw Error(ErrorKind::kTooFewDraws, "need at least 4 draws per chain");
  const std::size_t half = n / 2;
  SplitSeries s;
  for (const auto& c : chains) {
    s.halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    s.halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return s;
}

double Mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double SampleVar(const std::vector<double>& x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

void SamplerConfig::Validate() const {
  if (chains < 1) throw Error(ErrorKind::kInvalidConfig, "chains must be >= 1");
  if (warmup_iterations < 0) {
    throw Error(ErrorKind::kInvalidConfig, "warmup iterations must be >= 0");
  }
  if (sampling_iterations < 1) {
    throw Error(ErrorKind::kInvalidConfig, "sampling iterations must be >= 1");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw Error(ErrorKind::kInvalidConfig, "target_accept must lie in (0, 1)");
  }
  if (max_leapfrog_steps < 1) {
    throw Error(ErrorKind::kInvalidConfig, "max_leapfrog_steps must be >= 1");
  }
}

double StandardNormalTarget::Evaluate(std::span<const double> u,
                                      std::span<double> gradient,
                                      std::string*) const {
  double lp = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    lp -= 0.5 * u[i] * u[i];
    gradient[i] = -u[i];
  }
  return lp;
}

std::vector<ChainResult> SampleTarget(
    const LogDensityTarget& target, const SamplerConfig& cfg,
    const std::vector<std::vector<double>>& init) {
  cfg.Validate();
  if (static_cast<int>(init.size()) != cfg.chains) {
    throw Error(ErrorKind::kShapeMismatch, "one initial point per chain needed");
  }
  const auto n_chains = static_cast<std::size_t>(cfg.chains);
  std::vector<ChainResult> results(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);
  const auto run = [&](std::size_t c) {
    try {
      results[c] = RunChain(target, cfg, init[c], static_cast<int>(c));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const auto cap = static_cast<std::size_t>(ThreadCap(cfg.threads));
  if (cap <= 1 || n_chains == 1) {
    for (std::size_t c = 0; c < n_chains; ++c) run(c);
  } else {
    for (std::size_t start = 0; start < n_chains; start += cap) {
      std::vector<std::thread> pool;
      for (std::size_t c = start; c < std::min(n_chains, start + cap); ++c) {
        pool.emplace_back(run, c);
      }
      for (auto& t : pool) t.join();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  int divergent = 0;
  for (const auto& r : results) divergent += r.divergences;
  if (2 * divergent > cfg.chains * cfg.sampling_iterations) {
    throw Error(ErrorKind::kAllDivergent,
                std::to_string(divergent) + " of " +
                    std::to_string(cfg.chains * cfg.sampling_iterations) +
                    " post-warmup transitions diverged");
  }
  return results;
}

PosteriorDraws::PosteriorDraws(std::vector<std::string> names, int n_free,
                               int chains, int iterations,
                               std::vector<double> values)
    : names_(std::move(names)),
      n_free_(n_free),
      chains_(chains),
      iterations_(iterations),
      values_(std::move(values)) {
  if (values_.size() != names_.size() * static_cast<std::size_t>(chains) *
                            static_cast<std::size_t>(iterations)) {
    throw Error(ErrorKind::kShapeMismatch, "draw matrix has the wrong size");
  }
}

double PosteriorDraws::at(int chain, int iter, std::size_t column) const {
  return Row(chain, iter)[column];
}

std::span<const double> PosteriorDraws::Row(int s) const {
  return std::span<const double>(values_).subspan(
      static_cast<std::size_t>(s) * names_.size(), names_.size());
}

std::span<const double> PosteriorDraws::Row(int chain, int iter) const {
  return Row(chain * iterations_ + iter);
}

std::span<const double> PosteriorDraws::Theta(int s) const {
  return Row(s).first(static_cast<std::size_t>(n_free_));
}

std::span<const double> PosteriorDraws::Theta(int chain, int iter) const {
  return Theta(chain * iterations_ + iter);
}

std::optional<std::size_t> PosteriorDraws::IndexOf(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<double> PosteriorDraws::Column(std::size_t column) const {
  std::vector<double> out(static_cast<std::size_t>(total()));
  for (int s = 0; s < total(); ++s) out[static_cast<std::size_t>(s)] = Row(s)[column];
  return out;
}

std::vector<double> PosteriorDraws::Column(std::string_view name) const {
  const auto idx = IndexOf(name);
  if (!idx) {
    throw Error(ErrorKind::kUnknownParameter,
                "no parameter '" + std::string(name) + "' in the draws");
  }
  return Column(*idx);
}

std::vector<std::vector<double>> PosteriorDraws::ChainSeries(
    std::size_t column) const {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(chains_));
  for (int c = 0; c < chains_; ++c) {
    auto& series = out[static_cast<std::size_t>(c)];
    series.reserve(static_cast<std::size_t>(iterations_));
    for (int i = 0; i < iterations_; ++i) series.push_back(at(c, i, column));
  }
  return out;
}

std::vector<std::size_t> PosteriorDraws::BlockColumns(
    std::string_view block) const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < names_.size(); ++p) {
    if (BlockOf(names_[p]) == block) out.push_back(p);
  }
  if (out.empty()) {
    throw Error(ErrorKind::kUnknownParameter,
                "no block '" + std::string(block) + "' in the draws");
  }
  return out;
}

std::string PosteriorDraws::BlockOf(std::string_view name) {
  return std::string(name.substr(0, name.find('[')));
}

std::vector<double> Initialize(const ModelSpec& spec,
                               const ParameterLayout& layout, Rng& rng,
                               bool jitter) {
  std::vector<double> u(static_cast<std::size_t>(layout.dim()), 0.0);
  for (const Block& b : layout.blocks()) {
    for (int k = 0; k < b.size; ++k) {
      double& v = u[static_cast<std::size_t>(b.offset + k)];
      switch (b.kind) {
        case BlockKind::kIntercept:
        case BlockKind::kCoefficients:
        case BlockKind::kHyperMean:
          v = jitter ? rng.Uniform(-2.0, 2.0) : 0.0;
          break;
        case BlockKind::kHyperScale:
          v = 0.0;
          break;
        case BlockKind::kCutpoints:
          v = k == 0 ? spec.cutpoint_prior.first.location
                     : spec.cutpoint_prior.difference.location;
          break;
      }
    }
  }
  return u;
}

std::vector<std::string> DerivedNames(const Model& model) {
  std::vector<std::string> out;
  const auto& spec = model.spec();
  const auto& layout = model.layout();
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const Term& term = spec.terms[t];
    if (term.factors.size() != 1 || term.coding != CodingScheme::kEffect) continue;
    out.push_back(term.name + "[" + layout.terms()[t].labels[0].back() + "]");
  }
  return out;
}

void AppendDerived(const Model& model, std::span<const double> theta,
                   std::vector<double>& row) {
  const auto& spec = model.spec();
  const auto& layout = model.layout();
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const Term& term = spec.terms[t];
    if (term.factors.size() != 1 || term.coding != CodingScheme::kEffect) continue;
    const Block& b = layout.blocks()[static_cast<std::size_t>(
        layout.terms()[t].coefficients)];
    double sum = 0.0;
    for (int k = 0; k < b.size; ++k) {
      sum += theta[static_cast<std::size_t>(b.offset + k)];
    }
    row.push_back(-sum);
  }
}

PosteriorDraws Sample(const Model& model, const SamplerConfig& cfg,
                      bool jitter) {
  cfg.Validate();
  std::vector<std::vector<double>> init;
  for (int c = 0; c < cfg.chains; ++c) {
    // Init streams sit after the chain streams so they never overlap.
    Rng rng = Rng::ForStream(cfg.seed,
                             static_cast<std::uint64_t>(cfg.chains + c) + 1000003u);
    init.push_back(Initialize(model.spec(), model.layout(), rng, jitter));
  }
  ModelTarget target(model);
  const auto results = SampleTarget(target, cfg, init);

  std::vector<std::string> names = model.layout().names();
  const int n_free = static_cast<int>(names.size());
  for (auto& n : DerivedNames(model)) names.push_back(std::move(n));
  std::vector<double> values;
  values.reserve(names.size() * static_cast<std::size_t>(cfg.chains) *
                 static_cast<std::size_t>(cfg.sampling_iterations));
  const auto dim = static_cast<std::size_t>(n_free);
  std::vector<double> row;
  for (const auto& r : results) {
    for (int i = 0; i < cfg.sampling_iterations; ++i) {
      const std::span<const double> u(r.draws.data() + static_cast<std::size_t>(i) * dim, dim);
      row = Constrain(model, u);
      const std::vector<double> theta = row;
      AppendDerived(model, theta, row);
      values.insert(values.end(), row.begin(), row.end());
    }
  }
  PosteriorDraws draws(std::move(names), n_free, cfg.chains,
                       cfg.sampling_iterations, std::move(values));
  for (const auto& r : results) {
    draws.divergences.push_back(r.divergences);
    draws.step_size.push_back(r.step_size);
    draws.inverse_metric.push_back(r.inverse_metric);
    draws.mean_accept.push_back(r.mean_accept);
  }
  draws.seed = cfg.seed;
  return draws;
}

PosteriorDraws Sample(const ModelSpec& spec, const Dataset& ds,
                      const SamplerConfig& cfg) {
  const Model model(spec, ds);
  return Sample(model, cfg);
}

double SplitRhat(const std::vector<std::vector<double>>& chains) {
  const auto s = Split(chains);
  const auto m = static_cast<double>(s.halves.size());
  const auto n = static_cast<double>(s.halves[0].size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : s.halves) {
    const double mu = Mean(h);
    means.push_back(mu);
    w += SampleVar(h, mu);
  }
  w /= m;
  const double grand = Mean(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / (m - 1.0);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : kInf;
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

EssResult EffectiveSampleSize(const std::vector<std::vector<double>>& chains) {
  const auto s = Split(chains);
  const std::size_t m = s.halves.size();
  const std::size_t n = s.halves[0].size();
  const double total = static_cast<double>(m * n);

  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = Mean(s.halves[c]);
    vars[c] = SampleVar(s.halves[c], means[c]);
  }
  const double mean_var = Mean(vars);
  if (!(mean_var > 0.0)) return {1.0, true};
  double var_plus = mean_var * (static_cast<double>(n) - 1.0) / static_cast<double>(n);
  var_plus += SampleVar(means, Mean(means));

  // Mean over chains of the biased autocovariance at `lag`.
  const auto acov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const auto& x = s.halves[c];
      double sum = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) {
        sum += (x[i] - means[c]) * (x[i + lag] - means[c]);
      }
      acc += sum / static_cast<double>(n);
    }
    return acc / static_cast<double>(m);
  };
  std::vector<double> rho(n + 1, 0.0);
  double rho_even = 1.0;
  rho[0] = rho_even;
  double rho_odd = 1.0 - (mean_var - acov(1)) / var_plus;
  rho[1] = rho_odd;
  std::size_t t = 1;
  while (t + 4 < n && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - acov(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - acov(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[t + 1] = rho_even;
      rho[t + 2] = rho_odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (rho_even > 0.0) rho[max_t + 1] = rho_even;
  // Initial monotone sequence.
  for (std::size_t k = 1; k + 3 <= max_t; k += 2) {
    if (rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k]) {
      rho[k + 1] = (rho[k - 1] + rho[k]) / 2.0;
      rho[k + 2] = rho[k + 1];
    }
  }
  double tau = -1.0 + rho[max_t + 1];
  for (std::size_t k = 0; k < max_t; ++k) tau += 2.0 * rho[k];
  const double cap = 1.5 * total;
  if (!(tau > 0.0)) return {cap, false};
  return {std::min(total / tau, cap), false};
}

std::vector<double> Rhat(const PosteriorDraws& draws, std::string_view block) {
  std::vector<double> out;
  for (const auto col : draws.BlockColumns(block)) {
    out.push_back(SplitRhat(draws.ChainSeries(col)));
  }
  return out;
}

std::vector<double> Ess(const PosteriorDraws& draws, std::string_view block) {
  std::vector<double> out;
  for (const auto col : draws.BlockColumns(block)) {
    out.push_back(EffectiveSampleSize(draws.ChainSeries(col)).value);
  }
  return out;
}

Diagnostics Diagnose(const PosteriorDraws& draws) {
  Diagnostics d;
  d.names = draws.names();
  d.divergences = draws.divergences;
  d.step_size = draws.step_size;
  d.mean_accept = draws.mean_accept;
  if (draws.chains() < 2 || draws.iterations() < 4) {
    d.note = "need at least 2 chains and 4 draws to assess convergence";
    return d;
  }
  double worst_rhat = 1.0;
  double worst_ess = kInf;
  std::string worst_rhat_name, worst_ess_name;
  for (std::size_t p = 0; p < draws.n_columns(); ++p) {
    const auto series = draws.ChainSeries(p);
    const double r = SplitRhat(series);
    const double e = EffectiveSampleSize(series).value;
    d.rhat.push_back(r);
    d.ess.push_back(e);
    if (!(r <= worst_rhat)) {
      worst_rhat = r;
      worst_rhat_name = d.names[p];
    }
    if (e < worst_ess) {
      worst_ess = e;
      worst_ess_name = d.names[p];
    }
  }
  d.converged = worst_rhat < kRhatThreshold && worst_ess > kEssThreshold;
  if (!(worst_rhat < kRhatThreshold)) {
    d.note = "R-hat " + std::to_string(worst_rhat) + " for " + worst_rhat_name;
  } else if (!(worst_ess > kEssThreshold)) {
    d.note = "ESS " + std::to_string(worst_ess) + " for " + worst_ess_name;
  }
  return d;
}

}  // namespace grader_audit
