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

#ifndef SIRGP_MODEL_HPP
#define SIRGP_MODEL_HPP

/** @file
 * Compartmental state-space model with undocumented infections.
 *
 * Four real-valued compartments (S, I_U, I_D, R) evolve in discrete daily
 * steps driven by a time-varying transmission rate beta_t, a removal rate
 * alpha and the observed daily confirmed counts B_t:
 *
 *     S'   = S - beta S (I_U + I_D) / N
 *     I_U' = (1 - alpha) I_U + beta S (I_U + I_D) / N - B
 *     I_D' = (1 - alpha) I_D + B
 *     R'   = R + alpha (I_U + I_D)
 *
 * The observation model links B_t to the latent I_U through the diagnosis
 * rate gamma_t = B_t / ((1 - alpha) I_U_t), whose link transform is normal.
 */

#include <chrono>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include "sirgp/densities.hpp"
#include "sirgp/error.hpp"

namespace sirgp {

using Date = std::chrono::year_month_day;

/// Closed population size, fixed over the analysis window.
struct Population {
  double size = 0.0;

  constexpr Population() = default;
  explicit Population(double n) : size(n) {
    if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("Population: N must be positive");
  }
};

struct CompartmentState {
  double S = 0.0;
  double I_U = 0.0;
  double I_D = 0.0;
  double R = 0.0;

  double total() const { return S + I_U + I_D + R; }
  double infectious() const { return I_U + I_D; }
  bool non_negative() const { return S >= 0.0 && I_U >= 0.0 && I_D >= 0.0 && R >= 0.0; }
  bool finite() const {
    return std::isfinite(S) && std::isfinite(I_U) && std::isfinite(I_D) && std::isfinite(R);
  }

  friend bool operator==(const CompartmentState&, const CompartmentState&) = default;
};

/// Mass conservation to 1e-6 N.
inline bool conserves_mass(const CompartmentState& v, Population n, double rel_tol = 1e-6) {
  return std::abs(v.total() - n.size) <= rel_tol * n.size;
}

/// States for t = 0..T.
using Trajectory = std::vector<CompartmentState>;

/// Daily confirmed counts aligned to day 0.
struct Observations {
  std::vector<double> B;  ///< B_0..B_T
  double I_D0 = 0.0;
  Population population;
  Date day0_date{std::chrono::year{2020}, std::chrono::month{1}, std::chrono::day{1}};
  std::string region;

  std::size_t horizon() const { return B.size(); }  ///< T + 1
  std::size_t last_day() const { return B.size() - 1; }  ///< T

  void validate() const {
    if (B.empty()) throw DomainError("Observations: empty B series");
    for (double b : B)
      if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("Observations: B_t must be finite and >= 0");
    if (!(I_D0 > 0.0)) throw DomainError("Observations: I_D0 must be positive");
    if (!(population.size > 0.0)) throw DomainError("Observations: population not set");
  }
};

struct EpidemicParams {
  double I_U0 = 0.0;
  std::vector<double> beta;  ///< beta_0..beta_T
  double alpha = 0.0;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("EpidemicParams: alpha must lie in (0,1)");
    if (!(I_U0 > 0.0)) throw DomainError("EpidemicParams: I_U0 must be positive");
    for (double b : beta)
      if (!(b > 0.0)) throw DomainError("EpidemicParams: beta_t must be positive");
  }
};

// ---------------------------------------------------------------------------
// Link functions

enum class Link { logit, probit, cloglog };

inline std::string_view to_string(Link link) {
  switch (link) {
    case Link::logit: return "logit";
    case Link::probit: return "probit";
    case Link::cloglog: return "cloglog";
  }
  return "logit";
}

inline Link parse_link(std::string_view s) {
  if (s == "logit") return Link::logit;
  if (s == "probit") return Link::probit;
  if (s == "cloglog") return Link::cloglog;
  throw DomainError("unknown link function: " + std::string(s));
}

/// Standard normal CDF.
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard normal quantile.
inline double std_normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Maps a probability in (0,1) onto the real line.
inline double link_forward(double p, Link link) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("link_forward: p must lie in (0,1)");
  switch (link) {
    case Link::logit: return std::log(p) - std::log1p(-p);
    case Link::probit: return std_normal_quantile(p);
    case Link::cloglog: return std::log(-std::log1p(-p));
  }
  return 0.0;
}

inline double link_inverse(double x, Link link) {
  switch (link) {
    case Link::logit: return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    case Link::probit: return std_normal_cdf(x);
    case Link::cloglog: return -std::expm1(-std::exp(x));
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Propagation

/// One day of the recursion from state v with rate beta and diagnosed count b.
inline CompartmentState step(const CompartmentState& v, double beta, double alpha, double b, double n) {
  const double infections = beta * v.S * (v.I_U + v.I_D) / n;
  CompartmentState next;
  next.S = v.S - infections;
  next.I_U = (1.0 - alpha) * v.I_U + infections - b;
  next.I_D = (1.0 - alpha) * v.I_D + b;
  next.R = v.R + alpha * (v.I_U + v.I_D);
  return next;
}

/// Initial state with R_0 = 0 and S_0 = N - I_U0 - I_D0.
inline CompartmentState initial_state(double i_u0, double i_d0, Population n) {
  return {n.size - i_u0 - i_d0, i_u0, i_d0, 0.0};
}

/// Propagates v0 through days 1..T, or nullopt if a compartment goes negative.
/// `beta` and `b` must provide at least `days` entries (beta_0.., B_0..).
inline std::optional<Trajectory> try_propagate(const CompartmentState& v0, std::span<const double> beta,
                                               double alpha, std::span<const double> b, Population n,
                                               std::size_t days) {
  if (beta.size() < days || b.size() < days) throw DomainError("propagate: series shorter than the horizon");
  Trajectory traj;
  traj.reserve(days + 1);
  if (!v0.non_negative() || !v0.finite()) return std::nullopt;
  traj.push_back(v0);
  for (std::size_t t = 1; t <= days; ++t) {
    const CompartmentState next = step(traj.back(), beta[t - 1], alpha, b[t - 1], n.size);
    if (!next.non_negative() || !next.finite()) return std::nullopt;
    traj.push_back(next);
  }
  return traj;
}

/// Trajectory for t = 0..T where T + 1 = params.beta.size().
///
/// Only B_0..B_{T-1} enter the recursion. Throws InfeasibleTrajectory if a
/// compartment goes negative.
inline Trajectory propagate(const CompartmentState& v0, const EpidemicParams& params, std::span<const double> b,
                            Population n) {
  if (params.beta.empty()) throw DomainError("propagate: empty beta series");
  const std::size_t days = params.beta.size() - 1;
  auto traj = try_propagate(v0, params.beta, params.alpha, b, n, days);
  if (!traj) throw InfeasibleTrajectory("propagate: a compartment became negative");
  return *std::move(traj);
}

struct ReproductionNumbers {
  double basic = 0.0;      ///< R0(t) = beta_t / alpha
  double effective = 0.0;  ///< Re(t) = beta_t S_t / (alpha N)
};

inline std::vector<ReproductionNumbers> reproduction_numbers(const Trajectory& traj, const EpidemicParams& params,
                                                             Population n) {
  if (traj.size() > params.beta.size())
    throw DomainError("reproduction_numbers: trajectory longer than beta series");
  std::vector<ReproductionNumbers> out;
  out.reserve(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const double r0 = params.beta[t] / params.alpha;
    out.push_back({r0, r0 * traj[t].S / n.size});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Observation model

/// Link-scale diagnosis rates gamma~_t = link(B_t / ((1 - alpha) I_U_t)),
/// or nullopt if some gamma_t falls outside (0,1).
inline std::optional<std::vector<double>> diagnosis_link_values(const Trajectory& traj, std::span<const double> b,
                                                                double alpha, Link link) {
  std::vector<double> out(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const double g = b[t] / ((1.0 - alpha) * traj[t].I_U);
    if (!(g > 0.0 && g < 1.0)) return std::nullopt;
    out[t] = link_forward(g, link);
  }
  return out;
}

/// Sum over t of log N(gamma~_t; y_t' eta, sigma_gamma2).
///
/// Returns -inf when the trajectory is infeasible or some gamma_t lies
/// outside (0,1). No change-of-variables term from B_t to gamma~_t is added.
inline double log_likelihood(const EpidemicParams& params, const Eigen::VectorXd& eta, double sigma_gamma2,
                             const Observations& obs, Link link, const Eigen::MatrixXd& y) {
  if (params.beta.size() != obs.horizon()) throw DomainError("log_likelihood: beta and B lengths differ");
  if (static_cast<std::size_t>(y.rows()) != obs.horizon() || y.cols() != eta.size())
    throw DomainError("log_likelihood: covariate rows inconsistent with observations");
  if (!(sigma_gamma2 > 0.0) || !(params.alpha > 0.0 && params.alpha < 1.0)) return neg_inf;
  const auto v0 = initial_state(params.I_U0, obs.I_D0, obs.population);
  const auto traj = try_propagate(v0, params.beta, params.alpha, obs.B, obs.population, obs.last_day());
  if (!traj) return neg_inf;
  const auto gt = diagnosis_link_values(*traj, obs.B, params.alpha, link);
  if (!gt) return neg_inf;
  double ll = 0.0;
  for (std::size_t t = 0; t < gt->size(); ++t)
    ll += normal_log_pdf((*gt)[t], y.row(static_cast<Eigen::Index>(t)).dot(eta), sigma_gamma2);
  return ll;
}

}  // namespace sirgp

#endif  // SIRGP_MODEL_HPP
