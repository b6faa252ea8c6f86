/*
 * Copyright 2026 The sirgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef SIRGP_SAMPLER_HPP
#define SIRGP_SAMPLER_HPP

/** @file
 * Parallel-tempering Metropolis-within-Gibbs sampler.
 *
 * Chain j targets L(theta)/Delta_j + log prior(theta): only the likelihood
 * is tempered. Each iteration runs one Gibbs sweep per chain and then
 * proposes swaps between adjacent temperatures j, j+1 for j = 1..J-1.
 *
 * Sweep order and kernels:
 *   1. r0 = I_U0/I_D0, eta  random-walk MH on log r0 with eta integrated
 *                           out, then eta from its tempered conditional
 *   2. beta_tilde_t         single-site random-walk MH, t = 0..T
 *   3. alpha_inv            random-walk MH on log(alpha_inv - 1)
 *   4. mu                   conjugate normal (GP level, untempered)
 *   5. sigma_beta2          conjugate inverse gamma (GP level, untempered)
 *   6. rho                  random-walk MH on logit rho
 *   7. eta                  conjugate normal, tempered
 *   8. sigma_gamma2         conjugate inverse gamma, tempered
 *
 * Tempered conjugate updates: the likelihood in (eta, sigma_gamma2) is
 *   prod_t N(g_t; y_t'eta, s2)^(1/Delta)
 *     propto s2^(-(T+1)/(2 Delta)) exp(-sum_t (g_t - y_t'eta)^2 / (2 Delta s2)),
 * i.e. an ordinary normal likelihood with noise variance Delta*s2 for eta,
 * whose marginal over eta is N(g; Y eta*, Delta s2 I + Y S_eta Y'),
 * and for s2 an inverse-gamma kernel with shape (T+1)/(2 Delta) and rate
 * SSR/(2 Delta). So
 *   eta | .  ~ N(P^{-1}(S_eta^{-1} eta* + Y'g / (Delta s2)), P^{-1}),
 *              P = S_eta^{-1} + Y'Y / (Delta s2)
 *   s2 | .   ~ Inv-Ga(a + (T+1)/(2 Delta), b + SSR/(2 Delta)).
 * mu and sigma_beta2 only touch the GP prior on beta_tilde, which is not
 * tempered, so their conditionals are the same at every temperature.
 *
 * Proposal scales adapt during burn-in only, in batches, toward 0.23
 * acceptance for scalar blocks and 0.44 for each beta_tilde site.
 */

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sirgp/config_file.hpp"
#include "sirgp/densities.hpp"
#include "sirgp/error.hpp"
#include "sirgp/gp.hpp"
#include "sirgp/model.hpp"
#include "sirgp/priors.hpp"
#include "sirgp/random.hpp"

namespace sirgp {

// ---------------------------------------------------------------------------
// Configuration

struct TemperatureLadder {
  std::vector<double> deltas;  ///< Delta_1 > ... > Delta_J = 1

  /// Delta_j = base^(J - j), j = 1..J.
  static TemperatureLadder geometric(std::size_t chains, double base = 1.5) {
    TemperatureLadder l;
    for (std::size_t j = 1; j <= chains; ++j) l.deltas.push_back(std::pow(base, static_cast<double>(chains - j)));
    return l;
  }

  std::size_t size() const { return deltas.size(); }

  void validate() const {
    if (deltas.empty()) throw ConfigError("temperature ladder is empty");
    if (deltas.back() != 1.0) throw ConfigError("temperature ladder must end at exactly 1");
    for (std::size_t j = 0; j + 1 < deltas.size(); ++j)
      if (!(deltas[j] > deltas[j + 1])) throw ConfigError("temperature ladder must be strictly decreasing");
  }
};

struct ProposalScales {
  double log_r0 = 0.05;
  double beta_tilde = 0.02;
  double log_alpha_inv = 0.05;
  double logit_rho = 0.3;
};

struct SamplerConfig {
  std::size_t n_chains = 10;
  TemperatureLadder ladder = TemperatureLadder::geometric(10);
  std::size_t n_iter = 50000;
  std::size_t burn_in = 20000;
  std::size_t thin = 30;
  ProposalScales scales;
  bool adapt = true;
  std::size_t adapt_batch = 50;
  std::uint64_t seed = 1;
  std::size_t swap_every = 1;
  std::size_t threads = 1;  ///< physical parallelism only; results do not depend on it
  std::size_t init_retries = 100;

  std::size_t retained() const { return (n_iter - burn_in) / thin; }

  void validate() const {
    ladder.validate();
    if (ladder.size() != n_chains) throw ConfigError("ladder length differs from the number of chains");
    if (!(burn_in < n_iter)) throw ConfigError("burn_in must be smaller than n_iter");
    if (thin < 1) throw ConfigError("thin must be at least 1");
    if (swap_every < 1) throw ConfigError("swap_every must be at least 1");
    if (adapt_batch < 1) throw ConfigError("adapt_batch must be at least 1");
  }
};

/// Applies sampler keys from a config file on top of `cfg`.
///
/// Keys: chains, ladder_base, ladder (explicit comma list, hottest first),
/// iterations, burn_in, thin, swap_every, adapt (0/1), adapt_batch,
/// init_retries, seed, scale_log_r0, scale_beta_tilde, scale_log_alpha_inv,
/// scale_logit_rho. When `chains` is set without `ladder`, the ladder is
/// geometric with base `ladder_base` (default 1.5).
inline SamplerConfig apply_sampler_keys(SamplerConfig cfg, const KeyValueConfig& kv) {
  auto count = [&kv](const char* key, std::size_t fallback) {
    const long long v = kv.get_integer(key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError(std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  const double base = kv.get_double("ladder_base", 1.5);
  if (kv.has("chains")) {
    cfg.n_chains = count("chains", cfg.n_chains);
    cfg.ladder = TemperatureLadder::geometric(cfg.n_chains, base);
  } else if (kv.has("ladder_base")) {
    cfg.ladder = TemperatureLadder::geometric(cfg.n_chains, base);
  }
  if (const auto* v = kv.find("ladder")) {
    const Eigen::VectorXd d = parse_vector(*v, "ladder");
    cfg.ladder.deltas.assign(d.data(), d.data() + d.size());
    cfg.n_chains = cfg.ladder.size();
  }
  cfg.n_iter = count("iterations", cfg.n_iter);
  cfg.burn_in = count("burn_in", cfg.burn_in);
  cfg.thin = count("thin", cfg.thin);
  cfg.swap_every = count("swap_every", cfg.swap_every);
  cfg.adapt = kv.get_integer("adapt", cfg.adapt ? 1 : 0) != 0;
  cfg.adapt_batch = count("adapt_batch", cfg.adapt_batch);
  cfg.init_retries = count("init_retries", cfg.init_retries);
  cfg.seed = static_cast<std::uint64_t>(kv.get_integer("seed", static_cast<long long>(cfg.seed)));
  cfg.scales.log_r0 = kv.get_double("scale_log_r0", cfg.scales.log_r0);
  cfg.scales.beta_tilde = kv.get_double("scale_beta_tilde", cfg.scales.beta_tilde);
  cfg.scales.log_alpha_inv = kv.get_double("scale_log_alpha_inv", cfg.scales.log_alpha_inv);
  cfg.scales.logit_rho = kv.get_double("scale_logit_rho", cfg.scales.logit_rho);
  return cfg;
}

inline void write_sampler_keys(std::ostream& os, const SamplerConfig& cfg) {
  os.precision(17);
  Eigen::VectorXd ladder = Eigen::Map<const Eigen::VectorXd>(cfg.ladder.deltas.data(),
                                                             static_cast<Eigen::Index>(cfg.ladder.size()));
  os << "chains = " << cfg.n_chains << '\n'
     << "ladder = " << format_vector(ladder) << '\n'
     << "iterations = " << cfg.n_iter << '\n'
     << "burn_in = " << cfg.burn_in << '\n'
     << "thin = " << cfg.thin << '\n'
     << "swap_every = " << cfg.swap_every << '\n'
     << "adapt = " << (cfg.adapt ? 1 : 0) << '\n'
     << "adapt_batch = " << cfg.adapt_batch << '\n'
     << "init_retries = " << cfg.init_retries << '\n'
     << "seed = " << cfg.seed << '\n'
     << "scale_log_r0 = " << cfg.scales.log_r0 << '\n'
     << "scale_beta_tilde = " << cfg.scales.beta_tilde << '\n'
     << "scale_log_alpha_inv = " << cfg.scales.log_alpha_inv << '\n'
     << "scale_logit_rho = " << cfg.scales.logit_rho << '\n';
}

/// Design matrices: GP covariates X (rows x_t) and diagnosis covariates Y.
struct ModelDesign {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
};

inline ModelDesign make_design(const PriorConfig& prior, std::size_t horizon) {
  return {design_matrix(prior.beta_design, 0, horizon), design_matrix(prior.gamma_design, 0, horizon)};
}

// ---------------------------------------------------------------------------
// Observation models
//
// An observation model maps (r0, beta, alpha) to the link-scale diagnosis
// rates g_t, t = 0..T. The likelihood is then sum_t log N(g_t; y_t'eta, s2).

struct ModelCache {
  Trajectory states;
  std::vector<double> gamma_tilde;
};

template <class M>
concept ObservationModel = requires(const M& m, const ParameterState& th, std::span<const double> beta,
                                    std::size_t from, const ModelCache& base, ModelCache& out,
                                    ParameterState& init) {
  { m.horizon() } -> std::convertible_to<std::size_t>;
  { m.i_d0() } -> std::convertible_to<double>;
  /// Full evaluation into `out`; false if infeasible.
  { m.evaluate(th, beta, out) } -> std::same_as<bool>;
  /// Entries t >= from after beta_{from-1} changed; entries < from come from `base`.
  { m.evaluate_from(th, beta, from, base, out) } -> std::same_as<bool>;
  /// Repairs an infeasible starting state; false if impossible.
  { m.initial_guess(init) } -> std::same_as<bool>;
};

/// The compartmental model driven by observed daily confirmed counts.
class EpidemicModel {
 public:
  EpidemicModel(Observations obs, Link link) : obs_(std::move(obs)), link_(link) {
    obs_.validate();
    log_b_.resize(obs_.B.size());
    for (std::size_t t = 0; t < obs_.B.size(); ++t) log_b_[t] = obs_.B[t] > 0.0 ? std::log(obs_.B[t]) : neg_inf;
  }

  std::size_t horizon() const { return obs_.horizon(); }
  double i_d0() const { return obs_.I_D0; }
  Link link() const { return link_; }
  const Observations& observations() const { return obs_; }

  bool evaluate(const ParameterState& th, std::span<const double> beta, ModelCache& out) const {
    const std::size_t n = horizon();
    out.states.resize(n);
    out.gamma_tilde.resize(n);
    out.states[0] = initial_state(th.i_u0(obs_.I_D0), obs_.I_D0, obs_.population);
    if (!out.states[0].non_negative()) return false;
    const double alpha = th.alpha();
    if (!link_value(out.states[0], alpha, 0, out.gamma_tilde[0])) return false;
    return run(alpha, beta, 1, out.states[0], out);
  }

  bool evaluate_from(const ParameterState& th, std::span<const double> beta, std::size_t from,
                     const ModelCache& base, ModelCache& out) const {
    const std::size_t n = horizon();
    out.states.resize(n);
    out.gamma_tilde.resize(n);
    if (from >= n) return true;
    return run(th.alpha(), beta, from, base.states[from - 1], out);
  }

  /// Chooses beta so that the implied diagnosis rate equals the prior-mean
  /// rate on every day, raising r0 if day 0 is already infeasible.
  bool initial_guess(ParameterState& th) const {
    const double alpha = th.alpha();
    const double n = obs_.population.size;
    constexpr double target_gamma = 0.5;
    const double min_r0 = 2.0 * obs_.B[0] / ((1.0 - alpha) * target_gamma * obs_.I_D0);
    th.r0 = std::max(th.r0, min_r0);
    CompartmentState v = initial_state(th.i_u0(obs_.I_D0), obs_.I_D0, obs_.population);
    if (!v.non_negative()) return false;
    for (std::size_t t = 0; t + 1 < horizon(); ++t) {
      const double want = obs_.B[t + 1] / (target_gamma * (1.0 - alpha));
      const double needed = want - (1.0 - alpha) * v.I_U + obs_.B[t];
      double beta = needed * n / (v.S * v.infectious());
      beta = std::clamp(beta, 1e-3, 5.0);
      th.beta_tilde(static_cast<Eigen::Index>(t)) = std::log(beta);
      v = step(v, beta, alpha, obs_.B[t], n);
      if (!v.non_negative()) return false;
    }
    const auto last = static_cast<Eigen::Index>(horizon() - 1);
    if (last > 0) th.beta_tilde(last) = th.beta_tilde(last - 1);
    return true;
  }

 private:
  bool link_value(const CompartmentState& v, double alpha, std::size_t t, double& out) const {
    const double c = (1.0 - alpha) * v.I_U;
    const double b = obs_.B[t];
    if (!(b > 0.0) || !(c > b)) return false;
    if (link_ == Link::logit) {
      out = log_b_[t] - std::log(c - b);
    } else {
      out = link_forward(b / c, link_);
    }
    return std::isfinite(out);
  }

  bool run(double alpha, std::span<const double> beta, std::size_t from, CompartmentState prev,
           ModelCache& out) const {
    const double n = obs_.population.size;
    for (std::size_t t = from; t < horizon(); ++t) {
      const CompartmentState v = step(prev, beta[t - 1], alpha, obs_.B[t - 1], n);
      if (!v.non_negative() || !v.finite()) return false;
      out.states[t] = v;
      if (!link_value(v, alpha, t, out.gamma_tilde[t])) return false;
      prev = v;
    }
    return true;
  }

  Observations obs_;
  Link link_;
  std::vector<double> log_b_;
};

/// Test hook: link-scale rates fixed in advance, independent of the epidemic
/// parameters. The posterior of (eta, sigma_gamma2) is then a plain
/// normal-regression posterior.
class FixedResidualModel {
 public:
  explicit FixedResidualModel(std::vector<double> gamma_tilde) : g_(std::move(gamma_tilde)) {}

  std::size_t horizon() const { return g_.size(); }
  double i_d0() const { return 1.0; }

  bool evaluate(const ParameterState&, std::span<const double>, ModelCache& out) const {
    out.gamma_tilde = g_;
    return true;
  }
  bool evaluate_from(const ParameterState&, std::span<const double>, std::size_t from, const ModelCache&,
                     ModelCache& out) const {
    out.gamma_tilde.resize(g_.size());
    for (std::size_t t = from; t < g_.size(); ++t) out.gamma_tilde[t] = g_[t];
    return true;
  }
  bool initial_guess(ParameterState&) const { return true; }

 private:
  std::vector<double> g_;
};

// ---------------------------------------------------------------------------
// Targets and swaps

/// (1/delta) * log-likelihood + log prior. Only the likelihood is tempered.
inline double tempered_log_target(double log_lik, double log_prior_value, double delta) {
  if (!std::isfinite(log_lik) || !std::isfinite(log_prior_value)) return neg_inf;
  return log_lik / delta + log_prior_value;
}

/// Untempered log-likelihood of a state under an observation model.
template <ObservationModel Model>
double state_log_likelihood(const Model& model, const ParameterState& th, const ModelDesign& design) {
  ModelCache cache;
  const auto beta = th.beta();
  if (!model.evaluate(th, beta, cache)) return neg_inf;
  const Eigen::VectorXd fit = design.Y * th.eta;
  double ll = 0.0;
  for (std::size_t t = 0; t < cache.gamma_tilde.size(); ++t)
    ll += normal_log_pdf(cache.gamma_tilde[t], fit(static_cast<Eigen::Index>(t)), th.sigma_gamma2);
  return ll;
}

template <ObservationModel Model>
double tempered_log_target(const ParameterState& th, double delta, const Model& model, const PriorDensity& prior,
                           const ModelDesign& design) {
  const double lp = log_prior(th, prior, design.X, model.i_d0());
  if (!std::isfinite(lp)) return neg_inf;
  return tempered_log_target(state_log_likelihood(model, th, design), lp, delta);
}

/// log acceptance ratio for exchanging the states of chains j and j+1:
/// (1/Delta_j - 1/Delta_{j+1}) (L_{j+1} - L_j), with L the untempered log-likelihood.
inline double swap_log_acceptance(double log_lik_j, double log_lik_j1, double delta_j, double delta_j1) {
  return (1.0 / delta_j - 1.0 / delta_j1) * (log_lik_j1 - log_lik_j);
}

inline double swap_acceptance_probability(double log_lik_j, double log_lik_j1, double delta_j, double delta_j1) {
  return std::min(1.0, std::exp(swap_log_acceptance(log_lik_j, log_lik_j1, delta_j, delta_j1)));
}

// ---------------------------------------------------------------------------
// Chain machinery

/// State plus the cached quantities that the sweep keeps in sync with it.
struct ChainState {
  ParameterState theta;
  std::vector<double> beta;     ///< exp(beta_tilde)
  Eigen::VectorXd z;            ///< beta_tilde - X mu
  Eigen::VectorXd fit;          ///< Y eta
  ModelCache cache;
  std::vector<double> terms;    ///< per-day log-likelihood terms
  double log_lik = neg_inf;
  double term_offset = 0.0;     ///< -0.5 log(2 pi sigma_gamma2)
  double term_precision = 0.0;  ///< 1 / sigma_gamma2
};

/// Per-block proposal scales owned by a temperature slot.
struct ChainScales {
  double log_r0 = 0.05;
  std::vector<double> beta_tilde;
  double log_alpha_inv = 0.05;
  double logit_rho = 0.3;
};

struct BlockCounters {
  std::size_t r0 = 0;
  std::size_t alpha_inv = 0;
  std::size_t rho = 0;
  std::vector<std::size_t> beta_tilde;

  void reset(std::size_t sites) {
    r0 = alpha_inv = rho = 0;
    beta_tilde.assign(sites, 0);
  }
};

/// Outcome of a single sweep: which MH blocks accepted.
struct SweepResult {
  bool r0 = false;
  bool alpha_inv = false;
  bool rho = false;
  std::size_t beta_accepted = 0;
  std::size_t beta_sites = 0;

  bool all_accepted() const { return r0 && alpha_inv && rho && beta_accepted == beta_sites; }
};

/// Post-burn-in acceptance rates of one temperature slot.
struct BlockRates {
  double r0 = 0.0;
  double beta_tilde = 0.0;
  double alpha_inv = 0.0;
  double rho = 0.0;
};

namespace detail {

inline double logit(double p) { return std::log(p) - std::log1p(-p); }
inline double inv_logit(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

/// Draw from N(P^{-1} b, P^{-1}) given precision P.
inline Eigen::VectorXd draw_from_precision(const Eigen::MatrixXd& precision, const Eigen::VectorXd& b, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("conjugate update: precision not positive definite");
  const Eigen::VectorXd mean = llt.solve(b);
  Eigen::VectorXd e(b.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = std_normal(rng);
  return mean + llt.matrixU().solve(e);
}

}  // namespace detail

/// Everything a sweep needs besides the chain itself.
template <ObservationModel Model>
struct SweepContext {
  const Model& model;
  const PriorDensity& prior;
  const ModelDesign& design;
  Eigen::MatrixXd mu_prior_precision;
  Eigen::VectorXd mu_prior_shift;   ///< S_mu^{-1} mu*
  Eigen::MatrixXd eta_prior_precision;
  Eigen::VectorXd eta_prior_shift;  ///< S_eta^{-1} eta*
  Eigen::MatrixXd yty;              ///< Y'Y
  Eigen::VectorXd prior_fit;        ///< Y eta*

  SweepContext(const Model& m, const PriorDensity& p, const ModelDesign& d) : model(m), prior(p), design(d) {
    const auto& cfg = prior.config();
    const auto n = static_cast<Eigen::Index>(model.horizon());
    if (design.X.rows() != n || design.Y.rows() != n)
      throw ConfigError("design matrices do not match the observation horizon");
    if (design.X.cols() != cfg.mu.mean.size() || design.Y.cols() != cfg.eta.mean.size())
      throw ConfigError("design widths do not match the prior dimensions of mu and eta");
    mu_prior_precision = cfg.mu.cov.inverse();
    mu_prior_shift = mu_prior_precision * cfg.mu.mean;
    eta_prior_precision = cfg.eta.cov.inverse();
    eta_prior_shift = eta_prior_precision * cfg.eta.mean;
    yty = design.Y.transpose() * design.Y;
    prior_fit = design.Y * cfg.eta.mean;
  }

  double term(const ChainState& c, double g, std::size_t t) const {
    const double r = g - c.fit(static_cast<Eigen::Index>(t));
    return c.term_offset - 0.5 * r * r * c.term_precision;
  }

  void refresh_terms(ChainState& c) const {
    c.term_offset = -0.5 * (log_two_pi + std::log(c.theta.sigma_gamma2));
    c.term_precision = 1.0 / c.theta.sigma_gamma2;
    c.terms.resize(c.cache.gamma_tilde.size());
    double ll = 0.0;
    for (std::size_t t = 0; t < c.terms.size(); ++t) {
      c.terms[t] = term(c, c.cache.gamma_tilde[t], t);
      ll += c.terms[t];
    }
    c.log_lik = ll;
  }

  /// Rebuilds every cached quantity from theta; false if infeasible.
  bool rebuild(ChainState& c) const {
    c.beta = c.theta.beta();
    c.z = c.theta.beta_tilde - design.X * c.theta.mu;
    c.fit = design.Y * c.theta.eta;
    if (!model.evaluate(c.theta, c.beta, c.cache)) {
      c.log_lik = neg_inf;
      return false;
    }
    refresh_terms(c);
    return true;
  }

  double log_prior_of(const ChainState& c) const { return log_prior(c.theta, prior, design.X, model.i_d0()); }
};

/// One Metropolis-within-Gibbs sweep at temperature `delta`.
///
/// `scratch` is workspace of the same shape as `c.cache`. If `site_accepts`
/// is given, entry t is incremented whenever site t accepts.
template <ObservationModel Model>
SweepResult gibbs_sweep(ChainState& c, double delta, const SweepContext<Model>& ctx, const ChainScales& scales,
                        ModelCache& scratch, Rng& rng, std::vector<std::size_t>* site_accepts = nullptr) {
  const double inv_t = 1.0 / delta;
  const auto& prior = ctx.prior;
  const auto& design = ctx.design;
  const auto& pcfg = prior.config();
  const std::size_t n = ctx.model.horizon();
  const auto last = static_cast<Eigen::Index>(n - 1);
  SweepResult res;
  res.beta_sites = n;

  // (1) r0 jointly with eta. r0 moves on the log scale with eta integrated
  // out of the tempered likelihood, then eta is drawn from its conditional.
  // Scaling I_U shifts every g_t by about the same amount, which eta absorbs,
  // so updating r0 with eta held fixed mixes slowly along that ridge.
  {
    const double noise = delta * c.theta.sigma_gamma2;
    const Eigen::MatrixXd precision = ctx.eta_prior_precision + ctx.yty / noise;
    const Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw NumericalError("r0 update: precision not positive definite");
    // -0.5 g' (noise I + Y S_eta Y')^{-1} g up to terms free of g, via Woodbury.
    auto collapsed = [&](const std::vector<double>& gt) {
      const Eigen::Map<const Eigen::VectorXd> g(gt.data(), static_cast<Eigen::Index>(n));
      const Eigen::VectorXd r = g - ctx.prior_fit;
      const Eigen::VectorXd yr = design.Y.transpose() * r / noise;
      return -0.5 * (r.squaredNorm() / noise - yr.dot(llt.solve(yr)));
    };
    const double u = std::log(c.theta.r0);
    const double u_new = u + scales.log_r0 * std_normal(rng);
    ParameterState prop = c.theta;
    prop.r0 = std::exp(u_new);
    const bool feasible = std::isfinite(prop.r0) && prop.r0 > 0.0 && ctx.model.evaluate(prop, c.beta, scratch);
    double log_ratio = neg_inf;
    if (feasible) {
      log_ratio = collapsed(scratch.gamma_tilde) - collapsed(c.cache.gamma_tilde) +
                  prior.i_u0(prop.r0, ctx.model.i_d0()) - prior.i_u0(c.theta.r0, ctx.model.i_d0()) + (u_new - u);
    }
    const double uu = uniform01(rng);
    if (feasible && (log_ratio >= 0.0 || std::log(uu) < log_ratio)) {
      c.theta.r0 = prop.r0;
      std::swap(c.cache, scratch);
      res.r0 = true;
    }
    const Eigen::Map<const Eigen::VectorXd> g(c.cache.gamma_tilde.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd shift = ctx.eta_prior_shift + design.Y.transpose() * g / noise;
    c.theta.eta = detail::draw_from_precision(precision, shift, rng);
    c.fit = design.Y * c.theta.eta;
    ctx.refresh_terms(c);
  }

  // (2) beta_tilde, one site at a time. beta_t only affects days t+1..T.
  {
    const double s2 = c.theta.sigma_beta2;
    const double rho = c.theta.rho;
    scratch.states.resize(c.cache.states.size());
    scratch.gamma_tilde.resize(n);
    for (Eigen::Index t = 0; t <= last; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      const double step_sd = scales.beta_tilde[ts];
      const double old_value = c.theta.beta_tilde(t);
      const double new_value = old_value + step_sd * std_normal(rng);
      const double m_t = old_value - c.z(t);
      const double z_new = new_value - m_t;
      const double d_prior = ar1_site_log_terms(c.z, t, z_new, s2, rho) - ar1_site_log_terms(c.z, t, c.z(t), s2, rho);
      double d_lik = 0.0;
      bool feasible = true;
      const double old_beta = c.beta[ts];
      if (t < last) {
        c.beta[ts] = std::exp(new_value);
        feasible = ctx.model.evaluate_from(c.theta, c.beta, ts + 1, c.cache, scratch);
        if (feasible) {
          for (std::size_t k = ts + 1; k < n; ++k) d_lik += ctx.term(c, scratch.gamma_tilde[k], k) - c.terms[k];
        }
      }
      const double log_ratio = feasible ? inv_t * d_lik + d_prior : neg_inf;
      const double u = uniform01(rng);
      if (feasible && (log_ratio >= 0.0 || std::log(u) < log_ratio)) {
        c.theta.beta_tilde(t) = new_value;
        c.z(t) = z_new;
        c.beta[ts] = std::exp(new_value);
        for (std::size_t k = ts + 1; k < n; ++k) {
          if (!c.cache.states.empty()) c.cache.states[k] = scratch.states[k];
          c.cache.gamma_tilde[k] = scratch.gamma_tilde[k];
          c.terms[k] = ctx.term(c, scratch.gamma_tilde[k], k);
        }
        ++res.beta_accepted;
        if (site_accepts) ++(*site_accepts)[ts];
      } else {
        c.beta[ts] = old_beta;
      }
    }
    c.log_lik = 0.0;
    for (double v : c.terms) c.log_lik += v;
  }

  // (3) alpha_inv on log(alpha_inv - 1); Jacobian alpha_inv - 1.
  {
    const double u = std::log(c.theta.alpha_inv - 1.0);
    const double u_new = u + scales.log_alpha_inv * std_normal(rng);
    ParameterState prop = c.theta;
    prop.alpha_inv = 1.0 + std::exp(u_new);
    bool feasible = std::isfinite(prop.alpha_inv) && prop.alpha_inv > 1.0;
    if (feasible) feasible = ctx.model.evaluate(prop, c.beta, scratch);
    double log_ratio = neg_inf;
    if (feasible) {
      double ll = 0.0;
      for (std::size_t t = 0; t < n; ++t) ll += ctx.term(c, scratch.gamma_tilde[t], t);
      log_ratio = inv_t * (ll - c.log_lik) + prior.alpha_inv(prop.alpha_inv) - prior.alpha_inv(c.theta.alpha_inv) +
                  (u_new - u);
    }
    const double uu = uniform01(rng);
    if (feasible && (log_ratio >= 0.0 || std::log(uu) < log_ratio)) {
      c.theta.alpha_inv = prop.alpha_inv;
      std::swap(c.cache, scratch);
      ctx.refresh_terms(c);
      res.alpha_inv = true;
    }
  }

  // (4) mu | beta_tilde, sigma_beta2, rho. Whitened regression of beta_tilde on X.
  {
    const double sd = std::sqrt(c.theta.sigma_beta2);
    const Eigen::MatrixXd wx = ar1_whiten(design.X, c.theta.rho) / sd;
    const Eigen::VectorXd wb = ar1_whiten(c.theta.beta_tilde, c.theta.rho) / sd;
    const Eigen::MatrixXd precision = ctx.mu_prior_precision + wx.transpose() * wx;
    const Eigen::VectorXd shift = ctx.mu_prior_shift + wx.transpose() * wb;
    c.theta.mu = detail::draw_from_precision(precision, shift, rng);
    c.z = c.theta.beta_tilde - design.X * c.theta.mu;
  }

  // (5) sigma_beta2 | beta_tilde, mu, rho.
  {
    const double q = ar1_quadratic_form(c.z, c.theta.rho);
    c.theta.sigma_beta2 = inv_gamma(rng, pcfg.sigma_beta2.shape + 0.5 * static_cast<double>(n),
                                    pcfg.sigma_beta2.rate + 0.5 * q);
  }

  // (6) rho on the logit scale; Jacobian rho (1 - rho).
  {
    const double rho = c.theta.rho;
    const double u = detail::logit(rho);
    const double u_new = u + scales.logit_rho * std_normal(rng);
    const double rho_new = detail::inv_logit(u_new);
    double log_ratio = neg_inf;
    if (rho_new > 0.0 && rho_new < 1.0) {
      const GpSpec cur{design.X, c.theta.mu, c.theta.sigma_beta2, rho};
      const GpSpec alt{design.X, c.theta.mu, c.theta.sigma_beta2, rho_new};
      log_ratio = gp_log_density(c.theta.beta_tilde, alt) - gp_log_density(c.theta.beta_tilde, cur) +
                  prior.rho(rho_new) - prior.rho(rho) + std::log(rho_new * (1.0 - rho_new)) -
                  std::log(rho * (1.0 - rho));
    }
    const double uu = uniform01(rng);
    if (std::isfinite(log_ratio) && (log_ratio >= 0.0 || std::log(uu) < log_ratio)) {
      c.theta.rho = rho_new;
      res.rho = true;
    }
  }

  // (7) eta | g, sigma_gamma2, tempered: noise variance delta * sigma_gamma2.
  {
    const double noise = delta * c.theta.sigma_gamma2;
    const Eigen::Map<const Eigen::VectorXd> g(c.cache.gamma_tilde.data(), static_cast<Eigen::Index>(n));
    const Eigen::MatrixXd precision = ctx.eta_prior_precision + ctx.yty / noise;
    const Eigen::VectorXd shift = ctx.eta_prior_shift + design.Y.transpose() * g / noise;
    c.theta.eta = detail::draw_from_precision(precision, shift, rng);
    c.fit = design.Y * c.theta.eta;
  }

  // (8) sigma_gamma2 | g, eta, tempered: shape and rate of the likelihood scaled by 1/delta.
  {
    double ssr = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double r = c.cache.gamma_tilde[t] - c.fit(static_cast<Eigen::Index>(t));
      ssr += r * r;
    }
    c.theta.sigma_gamma2 = inv_gamma(rng, pcfg.sigma_gamma2.shape + 0.5 * static_cast<double>(n) * inv_t,
                                     pcfg.sigma_gamma2.rate + 0.5 * ssr * inv_t);
    ctx.refresh_terms(c);
  }

  return res;
}

/// Exchange attempt between adjacent chains; returns whether it was accepted.
inline bool pt_swap(ChainState& hotter, ChainState& colder, double delta_j, double delta_j1, Rng& rng) {
  const double log_a = swap_log_acceptance(hotter.log_lik, colder.log_lik, delta_j, delta_j1);
  const double u = uniform01(rng);
  if (log_a >= 0.0 || std::log(u) < log_a) {
    std::swap(hotter, colder);
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Drivers

struct PosteriorDraws {
  std::vector<ParameterState> draws;     ///< cold chain, post burn-in, thinned
  std::vector<double> log_likelihood;    ///< untempered, per draw
  std::vector<BlockRates> acceptance;    ///< per temperature slot, post burn-in
  std::vector<double> swap_acceptance;   ///< per adjacent pair, post burn-in
  std::vector<double> ladder;
  std::size_t n_iter = 0;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
};

namespace detail {

/// One temperature slot: its state, workspace, RNG stream, scales and counters.
struct Slot {
  ChainState chain;
  ModelCache scratch;
  Rng rng;
  ChainScales scales;
  double delta = 1.0;
  BlockCounters batch;
  BlockCounters post;
  std::size_t post_sweeps = 0;
};

template <ObservationModel Model>
ChainState initialize_chain(const SweepContext<Model>& ctx, const SamplerConfig& cfg, Rng& rng) {
  const auto& pc = ctx.prior.config();
  const std::size_t n = ctx.model.horizon();
  Eigen::LLT<Eigen::MatrixXd> mu_chol(pc.mu.cov);
  Eigen::LLT<Eigen::MatrixXd> eta_chol(pc.eta.cov);
  auto draw_normal = [&rng](const Eigen::VectorXd& mean, const Eigen::LLT<Eigen::MatrixXd>& chol) {
    Eigen::VectorXd e(mean.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = std_normal(rng);
    return Eigen::VectorXd(mean + chol.matrixL() * e);
  };

  ChainState c;
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(cfg.init_retries, 1); ++attempt) {
    ParameterState th;
    th.r0 = gamma_shape_rate(rng, pc.i_u0_ratio.shape, pc.i_u0_ratio.rate);
    do {
      th.alpha_inv = gamma_shape_rate(rng, pc.alpha_inv.shape, pc.alpha_inv.rate);
    } while (!(th.alpha_inv > 1.0));
    th.mu = draw_normal(pc.mu.mean, mu_chol);
    th.sigma_beta2 = inv_gamma(rng, pc.sigma_beta2.shape, pc.sigma_beta2.rate);
    th.rho = std::clamp(beta_variate(rng, pc.rho.a, pc.rho.b), 1e-6, 1.0 - 1e-6);
    th.eta = draw_normal(pc.eta.mean, eta_chol);
    th.sigma_gamma2 = inv_gamma(rng, pc.sigma_gamma2.shape, pc.sigma_gamma2.rate);
    th.beta_tilde = ctx.design.X * th.mu;
    c.theta = th;
    if (ctx.rebuild(c) && std::isfinite(ctx.log_prior_of(c))) return c;
  }
  // Prior draws never gave a feasible trajectory: keep the last draw of the
  // hyperparameters and let the model choose a feasible beta path.
  c.theta.beta_tilde = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (ctx.model.initial_guess(c.theta) && ctx.rebuild(c) && std::isfinite(ctx.log_prior_of(c))) return c;
  throw NumericalError("sampler initialization: no state with a finite target was found");
}

inline void adapt_scale(double& scale, std::size_t accepted, std::size_t trials, double target, double step) {
  const double rate = static_cast<double>(accepted) / static_cast<double>(trials);
  scale *= std::exp(rate > target ? step : -step);
  scale = std::clamp(scale, 1e-8, 1e3);
}

template <ObservationModel Model>
void init_slot(Slot& s, std::size_t index, double delta, const SweepContext<Model>& ctx, const SamplerConfig& cfg) {
  const std::size_t n = ctx.model.horizon();
  s.rng = make_stream(cfg.seed, StreamTag::chain, index);
  s.delta = delta;
  s.scales.log_r0 = cfg.scales.log_r0;
  s.scales.beta_tilde.assign(n, cfg.scales.beta_tilde);
  s.scales.log_alpha_inv = cfg.scales.log_alpha_inv;
  s.scales.logit_rho = cfg.scales.logit_rho;
  s.batch.reset(n);
  s.post.reset(n);
  s.chain = initialize_chain(ctx, cfg, s.rng);
  s.scratch = s.chain.cache;
}

/// Sweep for iteration `iter` (1-based) with batch adaptation during burn-in.
template <ObservationModel Model>
void advance_slot(Slot& s, std::size_t iter, const SweepContext<Model>& ctx, const SamplerConfig& cfg) {
  BlockCounters& counters = iter <= cfg.burn_in ? s.batch : s.post;
  const SweepResult r = gibbs_sweep(s.chain, s.delta, ctx, s.scales, s.scratch, s.rng, &counters.beta_tilde);
  counters.r0 += r.r0;
  counters.alpha_inv += r.alpha_inv;
  counters.rho += r.rho;
  if (iter > cfg.burn_in) ++s.post_sweeps;
  if (iter <= cfg.burn_in && cfg.adapt && iter % cfg.adapt_batch == 0) {
    const double step = std::min(0.25, 2.0 / std::sqrt(static_cast<double>(iter / cfg.adapt_batch)));
    adapt_scale(s.scales.log_r0, s.batch.r0, cfg.adapt_batch, 0.23, step);
    adapt_scale(s.scales.log_alpha_inv, s.batch.alpha_inv, cfg.adapt_batch, 0.23, step);
    adapt_scale(s.scales.logit_rho, s.batch.rho, cfg.adapt_batch, 0.23, step);
    for (std::size_t t = 0; t < s.scales.beta_tilde.size(); ++t)
      adapt_scale(s.scales.beta_tilde[t], s.batch.beta_tilde[t], cfg.adapt_batch, 0.44, step);
    s.batch.reset(s.scales.beta_tilde.size());
  }
}

inline BlockRates rates_of(const Slot& s) {
  BlockRates r;
  if (s.post_sweeps == 0) return r;
  const auto sweeps = static_cast<double>(s.post_sweeps);
  r.r0 = static_cast<double>(s.post.r0) / sweeps;
  r.alpha_inv = static_cast<double>(s.post.alpha_inv) / sweeps;
  r.rho = static_cast<double>(s.post.rho) / sweeps;
  double beta = 0.0;
  for (auto a : s.post.beta_tilde) beta += static_cast<double>(a);
  r.beta_tilde = s.post.beta_tilde.empty() ? 0.0 : beta / (sweeps * static_cast<double>(s.post.beta_tilde.size()));
  return r;
}

}  // namespace detail

using ProgressCallback = std::function<void(std::size_t iteration, std::size_t total)>;

namespace detail {

inline bool keep_draw(std::size_t iter, const SamplerConfig& cfg) {
  return iter > cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0;
}

inline PosteriorDraws empty_result(const SamplerConfig& cfg, std::vector<double> ladder) {
  PosteriorDraws out;
  out.ladder = std::move(ladder);
  out.n_iter = cfg.n_iter;
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;
  out.seed = cfg.seed;
  out.draws.reserve(cfg.retained());
  out.log_likelihood.reserve(cfg.retained());
  return out;
}

inline void record(PosteriorDraws& out, const ChainState& cold) {
  out.draws.push_back(cold.theta);
  out.log_likelihood.push_back(cold.log_lik);
}

}  // namespace detail

/// Single-chain Metropolis-within-Gibbs at temperature 1. Uses the same
/// stream, initialization and sweep as the cold slot of a one-chain
/// `run_sampler`, so the two produce identical draws for J = 1.
template <ObservationModel Model>
PosteriorDraws run_gibbs_sampler(const Model& model, const PriorDensity& prior, const ModelDesign& design,
                                 SamplerConfig cfg, const ProgressCallback& progress = {}) {
  cfg.n_chains = 1;
  cfg.ladder = TemperatureLadder{{1.0}};
  cfg.validate();
  const SweepContext<Model> ctx(model, prior, design);
  detail::Slot slot;
  detail::init_slot(slot, 0, 1.0, ctx, cfg);
  PosteriorDraws out = detail::empty_result(cfg, {1.0});
  for (std::size_t i = 1; i <= cfg.n_iter; ++i) {
    detail::advance_slot(slot, i, ctx, cfg);
    if (detail::keep_draw(i, cfg)) detail::record(out, slot.chain);
    if (progress && i % 1000 == 0) progress(i, cfg.n_iter);
  }
  out.acceptance.push_back(detail::rates_of(slot));
  return out;
}

/// Parallel tempering over `cfg.n_chains` temperatures.
///
/// Chains sweep concurrently on up to `cfg.threads` threads; swaps, draw
/// recording and progress reporting happen at a barrier in a single thread.
/// Each chain slot owns its RNG stream (seed, chain index) and swaps use a
/// separate stream, so output does not depend on the thread count.
template <ObservationModel Model>
PosteriorDraws run_sampler(const Model& model, const PriorDensity& prior, const ModelDesign& design,
                           const SamplerConfig& cfg, const ProgressCallback& progress = {}) {
  cfg.validate();
  const SweepContext<Model> ctx(model, prior, design);
  const std::size_t J = cfg.n_chains;
  std::vector<detail::Slot> slots(J);
  for (std::size_t j = 0; j < J; ++j) detail::init_slot(slots[j], j, cfg.ladder.deltas[j], ctx, cfg);

  PosteriorDraws out = detail::empty_result(cfg, cfg.ladder.deltas);
  Rng swap_rng = make_stream(cfg.seed, StreamTag::swap, 0);
  std::vector<std::size_t> swap_tries(J > 0 ? J - 1 : 0, 0);
  std::vector<std::size_t> swap_hits(swap_tries.size(), 0);

  auto finish_iteration = [&](std::size_t i) {
    if (i % cfg.swap_every == 0) {
      for (std::size_t j = 0; j + 1 < J; ++j) {
        const bool hit = pt_swap(slots[j].chain, slots[j + 1].chain, slots[j].delta, slots[j + 1].delta, swap_rng);
        if (i > cfg.burn_in) {
          ++swap_tries[j];
          swap_hits[j] += hit;
        }
      }
    }
    if (detail::keep_draw(i, cfg)) detail::record(out, slots[J - 1].chain);
    if (progress && i % 1000 == 0) progress(i, cfg.n_iter);
  };

  const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, J);
  if (workers == 1) {
    for (std::size_t i = 1; i <= cfg.n_iter; ++i) {
      for (auto& s : slots) detail::advance_slot(s, i, ctx, cfg);
      finish_iteration(i);
    }
  } else {
    std::size_t iter = 1;
    std::atomic<bool> failed{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto fail = [&](std::exception_ptr e) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = e;
      failed = true;
    };
    auto on_barrier = [&]() noexcept {
      if (!failed.load()) {
        try {
          finish_iteration(iter);
        } catch (...) {
          fail(std::current_exception());
        }
      }
      ++iter;
    };
    std::barrier sync(static_cast<std::ptrdiff_t>(workers), on_barrier);
    auto work = [&](std::size_t w) {
      for (std::size_t i = 1; i <= cfg.n_iter; ++i) {
        if (!failed.load()) {
          try {
            for (std::size_t k = w; k < J; k += workers) detail::advance_slot(slots[k], i, ctx, cfg);
          } catch (...) {
            fail(std::current_exception());
          }
        }
        sync.arrive_and_wait();
      }
    };
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
      work(0);
    }
    if (failure) std::rethrow_exception(failure);
  }

  for (const auto& s : slots) out.acceptance.push_back(detail::rates_of(s));
  for (std::size_t j = 0; j < swap_tries.size(); ++j)
    out.swap_acceptance.push_back(swap_tries[j] ? static_cast<double>(swap_hits[j]) / swap_tries[j] : 0.0);
  return out;
}

}  // namespace sirgp

#endif  // SIRGP_SAMPLER_HPP
