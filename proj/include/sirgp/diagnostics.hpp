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

#ifndef SIRGP_DIAGNOSTICS_HPP
#define SIRGP_DIAGNOSTICS_HPP

/** @file
 * Convergence and goodness-of-fit diagnostics.
 *
 * geweke_z compares the mean of the first 10% of a chain with the mean of
 * the last 50%, each standardized by a spectral estimate of the variance
 * of the segment mean (Bartlett lag window, lag = 4% of segment length).
 *
 * bayesian_chi2 maps each day's link-scale diagnosis rate through the fitted
 * normal CDF, u_t = Phi((g_t - y_t'eta) / sigma_gamma), counts u_t in G
 * equal-probability bins and returns
 *   omega = sum_g (m_g - n p_g)^2 / (n p_g),    n = T + 1,
 * per posterior draw. Under a good fit omega is roughly chi-square with G-1
 * degrees of freedom.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "sirgp/error.hpp"
#include "sirgp/forecast.hpp"
#include "sirgp/model.hpp"
#include "sirgp/priors.hpp"
#include "sirgp/stats.hpp"

namespace sirgp {

struct GewekeResult {
  double z_score = 0.0;
  double first = 0.1;
  double last = 0.5;
};

/// Variance of a segment mean from the Bartlett-weighted autocovariances.
inline double spectral_mean_variance(std::span<const double> x, double lag_fraction = 0.04) {
  const std::size_t n = x.size();
  const double m = sample_mean(x);
  const auto lag = static_cast<std::size_t>(std::floor(lag_fraction * static_cast<double>(n)));
  auto autocov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = k; i < n; ++i) s += (x[i] - m) * (x[i - k] - m);
    return s / static_cast<double>(n);
  };
  double s0 = autocov(0);
  for (std::size_t k = 1; k <= lag; ++k)
    s0 += 2.0 * (1.0 - static_cast<double>(k) / static_cast<double>(lag + 1)) * autocov(k);
  return s0 / static_cast<double>(n);
}

inline GewekeResult geweke_z(std::span<const double> chain, double first = 0.1, double last = 0.5) {
  if (chain.size() < 100) throw DomainError("geweke_z: chain must have at least 100 values");
  if (!(first > 0.0 && last > 0.0 && first + last <= 1.0)) throw DomainError("geweke_z: invalid segment fractions");
  const auto n = chain.size();
  const auto na = static_cast<std::size_t>(std::floor(first * static_cast<double>(n)));
  const auto nb = static_cast<std::size_t>(std::floor(last * static_cast<double>(n)));
  const auto a = chain.subspan(0, na);
  const auto b = chain.subspan(n - nb, nb);
  const double va = spectral_mean_variance(a);
  const double vb = spectral_mean_variance(b);
  if (!(va > 0.0) || !(vb > 0.0)) throw DegenerateChain("geweke_z: a segment has zero variance");
  return {(sample_mean(a) - sample_mean(b)) / std::sqrt(va + vb), first, last};
}

inline double chi_square_quantile(double p, double dof) {
  return boost::math::quantile(boost::math::chi_squared(dof), p);
}

/// Pearson statistic of values in [0,1] against bins with edges a_0..a_G.
inline double omega_statistic(std::span<const double> u, std::span<const double> edges) {
  const std::size_t groups = edges.size() - 1;
  std::vector<double> counts(groups, 0.0);
  for (double v : u) {
    auto g = static_cast<std::size_t>(std::upper_bound(edges.begin() + 1, edges.end() - 1, v) - (edges.begin() + 1));
    counts[std::min(g, groups - 1)] += 1.0;
  }
  const auto n = static_cast<double>(u.size());
  double omega = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const double expect = n * (edges[g + 1] - edges[g]);
    omega += (counts[g] - expect) * (counts[g] - expect) / expect;
  }
  return omega;
}

struct ChiSqFitResult {
  std::vector<double> omega_draws;
  double exceed_proportion = 0.0;
  double threshold = 0.0;
  std::vector<double> bin_edges;
  std::vector<double> bin_probs;
  std::size_t skipped = 0;  ///< draws whose trajectory was infeasible

  double mean_omega() const { return omega_draws.empty() ? 0.0 : sample_mean(omega_draws); }
};

/// Probability-integral transforms u_t of one draw, or empty if infeasible.
inline std::vector<double> pit_values(const ParameterState& th, const Observations& obs, Link link,
                                      const Eigen::MatrixXd& y) {
  const auto traj = draw_trajectory(th, obs);
  if (!traj) return {};
  const auto g = diagnosis_link_values(*traj, obs.B, th.alpha(), link);
  if (!g) return {};
  const double sd = std::sqrt(th.sigma_gamma2);
  std::vector<double> u(g->size());
  for (std::size_t t = 0; t < u.size(); ++t)
    u[t] = std_normal_cdf(((*g)[t] - y.row(static_cast<Eigen::Index>(t)).dot(th.eta)) / sd);
  return u;
}

inline ChiSqFitResult bayesian_chi2(const std::vector<ParameterState>& draws, const Observations& obs, Link link,
                                    const Eigen::MatrixXd& y, std::size_t groups = 5) {
  if (draws.empty()) throw DomainError("bayesian_chi2: no draws");
  if (groups < 2) throw DomainError("bayesian_chi2: need at least two bins");
  ChiSqFitResult r;
  for (std::size_t g = 0; g <= groups; ++g) r.bin_edges.push_back(static_cast<double>(g) / static_cast<double>(groups));
  r.bin_probs.assign(groups, 1.0 / static_cast<double>(groups));
  r.threshold = chi_square_quantile(0.95, static_cast<double>(groups - 1));
  std::size_t exceed = 0;
  for (const auto& th : draws) {
    const auto u = pit_values(th, obs, link, y);
    if (u.empty()) {
      ++r.skipped;
      continue;
    }
    const double w = omega_statistic(u, r.bin_edges);
    r.omega_draws.push_back(w);
    exceed += w > r.threshold;
  }
  if (!r.omega_draws.empty())
    r.exceed_proportion = static_cast<double>(exceed) / static_cast<double>(r.omega_draws.size());
  return r;
}

struct QqPoint {
  double empirical = 0.0;
  double theoretical = 0.0;
};

/// Sorted omega against chi-square quantiles at (i - 0.5) / n.
inline std::vector<QqPoint> chi2_qq_table(std::vector<double> omega, double dof) {
  std::sort(omega.begin(), omega.end());
  std::vector<QqPoint> out;
  const auto n = static_cast<double>(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i)
    out.push_back({omega[i], chi_square_quantile((static_cast<double>(i) + 0.5) / n, dof)});
  return out;
}

}  // namespace sirgp

#endif  // SIRGP_DIAGNOSTICS_HPP
