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

#ifndef SIRGP_IDENTIFIABILITY_HPP
#define SIRGP_IDENTIFIABILITY_HPP

/** @file
 * Two parameter sets with identical diagnosed counts.
 *
 * Process 1 has removal rate alpha1 and diagnosis rates gamma1_t. Pick a
 * second removal rate alpha2 and set gamma2_t = gamma1_t (1 - alpha1) / (1 - alpha2).
 * Then B_t = gamma_t (1 - alpha) I_U_t agrees for both processes exactly when
 * their undocumented compartments agree, and beta2_{t-1} is solved from the
 * I_U recursion so that I_U2_t = I_U1_t for every t.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sirgp/error.hpp"
#include "sirgp/model.hpp"
#include "sirgp/scenarios.hpp"

namespace sirgp {

struct ProcessRecord {
  EpidemicParams params;
  std::vector<double> gamma;
  Trajectory trajectory;
  std::vector<double> B;
  std::vector<ReproductionNumbers> reproduction;
};

struct IdentifiabilityResult {
  ProcessRecord first;
  ProcessRecord second;

  /// max_t |B1_t - B2_t| / max(1, B1_t)
  double max_relative_mismatch() const {
    double m = 0.0;
    for (std::size_t t = 0; t < first.B.size(); ++t)
      m = std::max(m, std::abs(first.B[t] - second.B[t]) / std::max(1.0, std::abs(first.B[t])));
    return m;
  }

  double max_re_gap() const {
    double m = 0.0;
    for (std::size_t t = 0; t < first.reproduction.size(); ++t)
      m = std::max(m, std::abs(first.reproduction[t].effective - second.reproduction[t].effective));
    return m;
  }
};

inline ProcessRecord run_process(const CompartmentState& v0, const EpidemicParams& params,
                                 std::vector<double> gamma, Population n) {
  ProcessRecord r;
  r.params = params;
  r.gamma = std::move(gamma);
  r.trajectory = simulate_diagnosed(v0, r.params.beta, r.params.alpha, r.gamma, n, r.B);
  r.reproduction = reproduction_numbers(r.trajectory, r.params, n);
  return r;
}

/// Builds the second process for removal rate `alpha2` from the same
/// initial state. Throws InfeasibleTrajectory if some solved beta2_t <= 0
/// and DomainError if some gamma2_t leaves (0,1).
inline IdentifiabilityResult identifiability_counterexample(const CompartmentState& v0, const EpidemicParams& base,
                                                            std::span<const double> gamma1, double alpha2,
                                                            Population n) {
  base.validate();
  if (!(alpha2 > 0.0 && alpha2 < 1.0)) throw DomainError("identifiability: alpha2 must lie in (0,1)");
  if (gamma1.size() != base.beta.size()) throw DomainError("identifiability: gamma and beta lengths differ");
  IdentifiabilityResult out;
  out.first = run_process(v0, base, {gamma1.begin(), gamma1.end()}, n);
  if (alpha2 == base.alpha) {
    out.second = out.first;
    return out;
  }

  const double a1 = base.alpha;
  const std::size_t len = base.beta.size();
  std::vector<double> gamma2(len);
  for (std::size_t t = 0; t < len; ++t) {
    gamma2[t] = gamma1[t] * (1.0 - a1) / (1.0 - alpha2);
    if (!(gamma2[t] > 0.0 && gamma2[t] < 1.0)) throw DomainError("identifiability: gamma2 outside (0,1)");
  }

  // Undocumented counts of process 1 for t = 0..T+1; the extra step pins beta2_T.
  std::vector<double> iu1(len + 1);
  for (std::size_t t = 0; t < len; ++t) iu1[t] = out.first.trajectory[t].I_U;
  iu1[len] = step(out.first.trajectory[len - 1], base.beta[len - 1], a1, out.first.B[len - 1], n.size).I_U;

  EpidemicParams p2{base.I_U0, std::vector<double>(len), alpha2};
  CompartmentState v = v0;
  for (std::size_t t = 0; t < len; ++t) {
    const double b = gamma2[t] * (1.0 - alpha2) * v.I_U;
    const double force = v.S * v.infectious() / n.size;
    const double beta = (iu1[t + 1] - (1.0 - alpha2) * v.I_U + b) / force;
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw InfeasibleTrajectory("identifiability: solved beta2 is not positive at t = " + std::to_string(t));
    p2.beta[t] = beta;
    v = step(v, beta, alpha2, b, n.size);
  }
  out.second = run_process(v0, p2, std::move(gamma2), n);
  return out;
}

/// Worked example: N = 2e7, I_U0 = 800, I_D0 = 100, alpha1 = 0.3,
/// alpha2 = 0.05, gamma1 = 0.2 and beta1_t = alpha1 R0(t) with the scn1 shape.
/// Both processes keep the same I_U, so beta2 stays positive only while
/// process 1 infects more than 0.25 I_U a day; that holds through day 69.
inline IdentifiabilityResult identifiability_demo(std::size_t T = 59) {
  const Population n(2e7);
  const double alpha1 = 0.3;
  ScenarioSpec spec;
  spec.alpha = alpha1;
  spec.T = T;
  EpidemicParams base{800.0, scenario_beta(spec), alpha1};
  const std::vector<double> gamma1(T + 1, 0.2);
  return identifiability_counterexample(initial_state(800.0, 100.0, n), base, gamma1, 0.05, n);
}

}  // namespace sirgp

#endif  // SIRGP_IDENTIFIABILITY_HPP
