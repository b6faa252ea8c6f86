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

#ifndef SIRGP_TESTS_ORACLES_HPP
#define SIRGP_TESTS_ORACLES_HPP

// Independent reference computations for tests. Nothing here calls into the
// library's samplers or closed-form updates.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace sirgp::testing {

struct GridPosterior {
  double eta_mean = 0.0;
  double sigma2_mean = 0.0;
};

/// Posterior means of (eta, s2) for g_t ~ N(eta, s2) with likelihood raised
/// to 1/delta, eta ~ N(m0, v0), s2 ~ Inv-Ga(a, b). Brute-force 2-D grid over
/// (eta, log s2); no conjugacy is used.
inline GridPosterior grid_posterior(const std::vector<double>& g, double m0, double v0, double a, double b,
                                    double delta, int points = 1200) {
  const double n = static_cast<double>(g.size());
  double sum = 0.0, sum2 = 0.0;
  for (double v : g) sum += v, sum2 += v * v;
  const double gbar = sum / n;
  const double spread = std::sqrt(std::max(sum2 / n - gbar * gbar, 1e-6));
  const double half = 12.0 * spread * std::sqrt(delta / n) + 1.0;
  const double eta_lo = gbar - half, eta_hi = gbar + half;
  const double ls_lo = std::log(spread * spread) - 6.0, ls_hi = std::log(spread * spread) + 6.0;

  auto log_post = [&](double eta, double ls) {
    const double s2 = std::exp(ls);
    const double ssr = sum2 - 2.0 * eta * sum + n * eta * eta;
    const double ll = -0.5 * n * std::log(2.0 * std::numbers::pi * s2) - 0.5 * ssr / s2;
    const double lp_eta = -0.5 * (eta - m0) * (eta - m0) / v0;
    const double lp_s2 = -(a + 1.0) * ls - b / s2;
    return ll / delta + lp_eta + lp_s2 + ls;  // + ls: Jacobian of the log grid
  };
  double peak = -INFINITY;
  for (int i = 0; i < points; ++i)
    for (int j = 0; j < points; ++j) {
      const double eta = eta_lo + (eta_hi - eta_lo) * (i + 0.5) / points;
      const double ls = ls_lo + (ls_hi - ls_lo) * (j + 0.5) / points;
      peak = std::max(peak, log_post(eta, ls));
    }
  double z = 0.0, e_eta = 0.0, e_s2 = 0.0;
  for (int i = 0; i < points; ++i)
    for (int j = 0; j < points; ++j) {
      const double eta = eta_lo + (eta_hi - eta_lo) * (i + 0.5) / points;
      const double ls = ls_lo + (ls_hi - ls_lo) * (j + 0.5) / points;
      const double w = std::exp(log_post(eta, ls) - peak);
      z += w;
      e_eta += w * eta;
      e_s2 += w * std::exp(ls);
    }
  return {e_eta / z, e_s2 / z};
}

struct RidgePosterior {
  double log_r0_mean = 0.0;
  double eta_mean = 0.0;
};

/// Posterior means of (log r0, eta) for g_t = c_t - log r0 ~ N(eta, s2) with
/// likelihood raised to 1/delta, r0 ~ Ga(k, rate), eta ~ N(m0, v0) and
/// s2 ~ Inv-Ga(a, b). Brute-force 3-D grid over (log r0, eta, log s2).
inline RidgePosterior ridge_posterior(const std::vector<double>& c, double k, double rate, double m0, double v0,
                                      double a, double b, double delta, int points = 160) {
  const double n = static_cast<double>(c.size());
  double sc = 0.0, sc2 = 0.0;
  for (double v : c) sc += v, sc2 += v * v;
  const double spread = std::sqrt(std::max(sc2 / n - (sc / n) * (sc / n), 1e-6));
  const double u_lo = std::log(k / rate) - 4.0, u_hi = std::log(k / rate) + 3.0;
  const double eta_lo = sc / n - u_hi - 3.0, eta_hi = sc / n - u_lo + 3.0;
  const double ls_lo = std::log(spread * spread) - 5.0, ls_hi = std::log(spread * spread) + 5.0;

  auto at = [&](double lo, double hi, int i) { return lo + (hi - lo) * (i + 0.5) / points; };
  auto log_post = [&](double u, double eta, double ls) {
    const double s2 = std::exp(ls);
    // sum_t (c_t - u - eta)^2
    const double shift = u + eta;
    const double ssr = sc2 - 2.0 * shift * sc + n * shift * shift;
    const double ll = -0.5 * n * std::log(2.0 * std::numbers::pi * s2) - 0.5 * ssr / s2;
    const double lp_u = k * u - rate * std::exp(u);  // Ga(r0) times the Jacobian r0
    const double lp_eta = -0.5 * (eta - m0) * (eta - m0) / v0;
    const double lp_s2 = -(a + 1.0) * ls - b / s2 + ls;
    return ll / delta + lp_u + lp_eta + lp_s2;
  };
  double peak = -INFINITY;
  for (int i = 0; i < points; ++i)
    for (int j = 0; j < points; ++j)
      for (int l = 0; l < points; ++l)
        peak = std::max(peak, log_post(at(u_lo, u_hi, i), at(eta_lo, eta_hi, j), at(ls_lo, ls_hi, l)));
  double z = 0.0, e_u = 0.0, e_eta = 0.0;
  for (int i = 0; i < points; ++i)
    for (int j = 0; j < points; ++j)
      for (int l = 0; l < points; ++l) {
        const double u = at(u_lo, u_hi, i), eta = at(eta_lo, eta_hi, j);
        const double w = std::exp(log_post(u, eta, at(ls_lo, ls_hi, l)) - peak);
        z += w;
        e_u += w * u;
        e_eta += w * eta;
      }
  return {e_u / z, e_eta / z};
}

}  // namespace sirgp::testing

#endif  // SIRGP_TESTS_ORACLES_HPP
