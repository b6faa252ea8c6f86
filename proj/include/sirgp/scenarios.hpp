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

#ifndef SIRGP_SCENARIOS_HPP
#define SIRGP_SCENARIOS_HPP

/** @file
 * Synthetic epidemics with known truth.
 *
 * Three transmission-rate shapes, each pinned by three values of the basic
 * reproduction number R0(t) = beta_t / alpha:
 *   scn1  R0(t) = b / ((t+1)^c - a)            R0(0)=3,   R0(14)=2,   R0(49)=1
 *   scn2  R0(t) = exp(a sin(0.2 t) - b t + c)  R0(0)=2.5, R0(14)=2.2, R0(49)=1
 *   scn3  R0(t) = exp(log 2.5 - 0.4 floor(t/20))
 * Daily diagnoses are B_t = gamma_t (1 - alpha) I_U_t with random gamma_t.
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sirgp/error.hpp"
#include "sirgp/model.hpp"
#include "sirgp/random.hpp"

namespace sirgp {

enum class ScenarioId { scn1, scn2, scn3 };

inline std::string_view to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::scn1: return "scn1";
    case ScenarioId::scn2: return "scn2";
    case ScenarioId::scn3: return "scn3";
  }
  return "scn1";
}

inline ScenarioId parse_scenario(std::string_view s) {
  if (s == "scn1" || s == "1") return ScenarioId::scn1;
  if (s == "scn2" || s == "2") return ScenarioId::scn2;
  if (s == "scn3" || s == "3") return ScenarioId::scn3;
  throw ConfigError("unknown scenario: " + std::string(s));
}

/// How a normal draw on the link scale becomes a diagnosis rate.
enum class RateTransform {
  cloglog_inverse,  ///< gamma = 1 - exp(-exp(x))
  logit_inverse,    ///< gamma = 1 / (1 + exp(-x))
};

struct ScenarioSpec {
  ScenarioId id = ScenarioId::scn1;
  double N = 2e7;
  double I_U0 = 800.0;
  double I_D0 = 100.0;
  double alpha = 1.0 / 9.3;
  std::size_t T = 79;
  double gamma_mean_tilde = std::log(0.25);  // logit(0.2)
  double gamma_sd = 0.25;
  std::uint64_t seed = 1;
  RateTransform transform = RateTransform::cloglog_inverse;
  bool integerize = false;  ///< round B_t to whole counts, zeros floored at 0.5
};

// ---------------------------------------------------------------------------
// Root finding

struct NewtonResult {
  Eigen::Vector3d x;
  double residual = 0.0;
  bool converged = false;
};

/// Damped Newton on F: R^3 -> R^3 with a forward-difference Jacobian.
inline NewtonResult damped_newton(const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f,
                                  Eigen::Vector3d x, double tol = 1e-12, int max_iter = 200) {
  Eigen::Vector3d fx = f(x);
  for (int it = 0; it < max_iter && fx.allFinite(); ++it) {
    if (fx.lpNorm<Eigen::Infinity>() < tol) return {x, fx.lpNorm<Eigen::Infinity>(), true};
    Eigen::Matrix3d jac;
    for (int k = 0; k < 3; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(x(k)));
      Eigen::Vector3d xh = x;
      xh(k) += h;
      jac.col(k) = (f(xh) - fx) / h;
    }
    const Eigen::Vector3d dx = jac.fullPivLu().solve(-fx);
    if (!dx.allFinite()) break;
    double lambda = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half, lambda *= 0.5) {
      const Eigen::Vector3d trial = x + lambda * dx;
      const Eigen::Vector3d ft = f(trial);
      if (ft.allFinite() && ft.norm() < fx.norm()) {
        x = trial;
        fx = ft;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  const double r = fx.allFinite() ? fx.lpNorm<Eigen::Infinity>() : INFINITY;
  return {x, r, r < tol};
}

/// Bisection for a sign change of g on [lo, hi].
inline double bisect(const std::function<double(double)>& g, double lo, double hi, double tol = 1e-15) {
  double glo = g(lo);
  if (glo * g(hi) > 0.0) throw SolveFailure("bisect: no sign change on the bracket");
  for (int it = 0; it < 400 && hi - lo > tol * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Transmission-rate shapes

struct ScenarioConstants {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// R0(t) of a scenario with the given constants (ignored for scn3).
inline double scenario_r0(ScenarioId id, const ScenarioConstants& k, double t) {
  switch (id) {
    case ScenarioId::scn1: return k.b / (std::pow(t + 1.0, k.c) - k.a);
    case ScenarioId::scn2: return std::exp(k.a * std::sin(0.2 * t) - k.b * t + k.c);
    case ScenarioId::scn3: return std::exp(std::log(2.5) - 0.4 * std::floor(t / 20.0));
  }
  return 0.0;
}

/// The pinned (day, R0) pairs of scn1 and scn2.
inline std::array<std::array<double, 2>, 3> scenario_targets(ScenarioId id) {
  if (id == ScenarioId::scn1) return {{{0.0, 3.0}, {14.0, 2.0}, {49.0, 1.0}}};
  if (id == ScenarioId::scn2) return {{{0.0, 2.5}, {14.0, 2.2}, {49.0, 1.0}}};
  throw DomainError("scenario_targets: scn3 is closed form");
}

/// Residuals R0(t_k) - target_k.
inline Eigen::Vector3d scenario_residuals(ScenarioId id, const ScenarioConstants& k) {
  const auto targets = scenario_targets(id);
  Eigen::Vector3d r;
  for (int i = 0; i < 3; ++i) r(i) = scenario_r0(id, k, targets[i][0]) - targets[i][1];
  return r;
}

/// Solves the three pinning equations of scn1 or scn2; scn3 returns zeros.
///
/// Damped Newton from a fixed start; if it stalls, scn1 falls back to
/// bisection on the reduced equation 50^c - 4 15^c + 3 = 0 (away from the
/// degenerate root c = 0) and scn2 to its exact linear solution.
inline ScenarioConstants solve_scenario_constants(ScenarioId id, double tol = 1e-12) {
  if (id == ScenarioId::scn3) return {};
  auto f = [id](const Eigen::Vector3d& x) { return scenario_residuals(id, {x(0), x(1), x(2)}); };
  const Eigen::Vector3d start = id == ScenarioId::scn1 ? Eigen::Vector3d(-30.0, 100.0, 1.1)
                                                       : Eigen::Vector3d(0.0, 0.02, 1.0);
  const NewtonResult nr = damped_newton(f, start, tol);
  ScenarioConstants k{nr.x(0), nr.x(1), nr.x(2)};
  if (!nr.converged) {
    if (id == ScenarioId::scn1) {
      k.c = bisect([](double c) { return std::pow(50.0, c) - 4.0 * std::pow(15.0, c) + 3.0; }, 0.5, 3.0);
      k.a = 3.0 - 2.0 * std::pow(15.0, k.c);
      k.b = 3.0 * (1.0 - k.a);
    } else {
      k.c = std::log(2.5);
      Eigen::Matrix2d m;
      m << std::sin(2.8), -14.0, std::sin(9.8), -49.0;
      const Eigen::Vector2d rhs(std::log(2.2) - k.c, -k.c);
      const Eigen::Vector2d ab = m.fullPivLu().solve(rhs);
      k.a = ab(0);
      k.b = ab(1);
    }
  }
  const double r = scenario_residuals(id, k).lpNorm<Eigen::Infinity>();
  if (!(r < 1e-10)) throw SolveFailure("scenario constants did not converge, residual " + std::to_string(r));
  return k;
}

/// beta_t for t = 0..T.
inline std::vector<double> scenario_beta(const ScenarioSpec& spec) {
  const ScenarioConstants k = solve_scenario_constants(spec.id);
  std::vector<double> beta(spec.T + 1);
  for (std::size_t t = 0; t <= spec.T; ++t) beta[t] = spec.alpha * scenario_r0(spec.id, k, static_cast<double>(t));
  return beta;
}

// ---------------------------------------------------------------------------
// Generators

/// Runs the recursion with B_t = gamma_t (1 - alpha) I_U_t; returns the
/// trajectory for t = 0..T and the B series. `round` post-processes each B_t
/// before it enters the next step.
inline Trajectory simulate_diagnosed(const CompartmentState& v0, std::span<const double> beta, double alpha,
                                     std::span<const double> gamma, Population n, std::vector<double>& b_out,
                                     const std::function<double(double)>& round = {}) {
  if (beta.size() != gamma.size() || beta.empty()) throw DomainError("simulate_diagnosed: length mismatch");
  Trajectory traj{v0};
  b_out.assign(beta.size(), 0.0);
  for (std::size_t t = 0; t < beta.size(); ++t) {
    double b = gamma[t] * (1.0 - alpha) * traj[t].I_U;
    if (round) b = round(b);
    b_out[t] = b;
    if (t + 1 < beta.size()) {
      const CompartmentState next = step(traj[t], beta[t], alpha, b, n.size);
      if (!next.non_negative() || !next.finite()) throw InfeasibleTrajectory("simulate_diagnosed: negative compartment");
      traj.push_back(next);
    }
  }
  return traj;
}

struct ScenarioData {
  Observations obs;
  EpidemicParams truth;
  Trajectory trajectory;
  std::vector<double> gamma;
  std::vector<double> gamma_tilde;
  std::vector<ReproductionNumbers> reproduction;
};

inline double apply_rate_transform(double x, RateTransform tr) {
  return tr == RateTransform::cloglog_inverse ? -std::expm1(-std::exp(x)) : link_inverse(x, Link::logit);
}

inline ScenarioData generate_scenario(const ScenarioSpec& spec) {
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw ConfigError("scenario: alpha must lie in (0,1)");
  if (!(spec.gamma_sd >= 0.0)) throw ConfigError("scenario: gamma_sd must be non-negative");
  const Population pop(spec.N);
  ScenarioData out;
  out.truth.I_U0 = spec.I_U0;
  out.truth.alpha = spec.alpha;
  out.truth.beta = scenario_beta(spec);

  Rng rng = make_stream(spec.seed, StreamTag::scenario, static_cast<std::uint64_t>(spec.id));
  out.gamma_tilde.resize(spec.T + 1);
  out.gamma.resize(spec.T + 1);
  for (std::size_t t = 0; t <= spec.T; ++t) {
    out.gamma_tilde[t] = spec.gamma_mean_tilde + spec.gamma_sd * std_normal(rng);
    out.gamma[t] = apply_rate_transform(out.gamma_tilde[t], spec.transform);
  }
  std::function<double(double)> round;
  if (spec.integerize) round = [](double b) {
      const double r = std::round(b);
      return r > 0.0 ? r : 0.5;
    };
  out.trajectory = simulate_diagnosed(initial_state(spec.I_U0, spec.I_D0, pop), out.truth.beta, spec.alpha,
                                      out.gamma, pop, out.obs.B, round);
  out.obs.I_D0 = spec.I_D0;
  out.obs.population = pop;
  out.obs.region = std::string(to_string(spec.id));
  out.reproduction = reproduction_numbers(out.trajectory, out.truth, pop);
  return out;
}

struct StochasticData {
  Observations obs;
  std::vector<std::array<std::int64_t, 4>> states;  ///< (S, I_U, I_D, R) for t = 0..T
  std::vector<std::int64_t> infections;             ///< A_t
  std::vector<std::int64_t> diagnosed;              ///< B_t before zero flooring
  std::vector<std::int64_t> removed_undocumented;   ///< C_t
  std::vector<std::int64_t> removed_documented;     ///< D_t
};

/// Integer-valued chain binomial counterpart of the deterministic model:
///   A_t ~ Bin(S_t, 1 - exp(-beta_t (I_U_t + I_D_t) / N))
///   C_t ~ Bin(I_U_t, 1 - exp(-alpha))
///   B_t | C_t ~ Bin(I_U_t - C_t, 1 - exp(-gamma_t))
///   D_t ~ Bin(I_D_t, 1 - exp(-alpha))
/// The observation series floors zero counts at 0.5.
inline StochasticData stochastic_generate(const ScenarioSpec& spec, std::span<const double> beta,
                                          std::span<const double> gamma) {
  if (beta.size() != spec.T + 1 || gamma.size() != spec.T + 1)
    throw DomainError("stochastic_generate: beta and gamma must have T+1 entries");
  Rng rng = make_stream(spec.seed, StreamTag::stochastic, static_cast<std::uint64_t>(spec.id));
  const auto n = static_cast<std::int64_t>(std::llround(spec.N));
  const auto iu0 = static_cast<std::int64_t>(std::llround(spec.I_U0));
  const auto id0 = static_cast<std::int64_t>(std::llround(spec.I_D0));
  StochasticData out;
  std::array<std::int64_t, 4> v{n - iu0 - id0, iu0, id0, 0};
  const double p_remove = -std::expm1(-spec.alpha);
  for (std::size_t t = 0; t <= spec.T; ++t) {
    out.states.push_back(v);
    const double force = beta[t] * static_cast<double>(v[1] + v[2]) / static_cast<double>(n);
    const std::int64_t a = binomial(rng, v[0], -std::expm1(-force));
    const std::int64_t c = binomial(rng, v[1], p_remove);
    const std::int64_t b = binomial(rng, v[1] - c, -std::expm1(-gamma[t]));
    const std::int64_t d = binomial(rng, v[2], p_remove);
    out.infections.push_back(a);
    out.removed_undocumented.push_back(c);
    out.diagnosed.push_back(b);
    out.removed_documented.push_back(d);
    v = {v[0] - a, v[1] + a - b - c, v[2] + b - d, v[3] + c + d};
  }
  out.obs.B.reserve(out.diagnosed.size());
  for (auto b : out.diagnosed) out.obs.B.push_back(b == 0 ? 0.5 : static_cast<double>(b));
  out.obs.I_D0 = spec.I_D0;
  out.obs.population = Population(spec.N);
  out.obs.region = std::string(to_string(spec.id)) + "-stochastic";
  return out;
}

}  // namespace sirgp

#endif  // SIRGP_SCENARIOS_HPP
