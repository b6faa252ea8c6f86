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

#ifndef SIRGP_FORECAST_HPP
#define SIRGP_FORECAST_HPP

/** @file
 * Posterior predictive simulation of future diagnoses and Re(t).
 *
 * For each posterior draw: extrapolate log beta with the GP conditional,
 * then for h = 1..H step the compartments one day, draw the link-scale
 * diagnosis rate g ~ N(y'eta, sigma_gamma2) and set
 * B = link^{-1}(g) (1 - alpha) I_U, which feeds the next step.
 */

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sirgp/error.hpp"
#include "sirgp/gp.hpp"
#include "sirgp/model.hpp"
#include "sirgp/priors.hpp"
#include "sirgp/random.hpp"
#include "sirgp/stats.hpp"

namespace sirgp {

struct ForecastOptions {
  std::size_t horizon = 30;
  std::uint64_t seed = 1;
  bool keep_trajectories = false;
};

struct ForecastDraws {
  Eigen::MatrixXd B_star;   ///< draws x horizon
  Eigen::MatrixXd Re_star;  ///< draws x horizon
  std::vector<Trajectory> trajectories;  ///< states T+1..T+H per draw, if kept
  std::vector<std::size_t> source;       ///< posterior draw index of each row
  std::size_t skipped = 0;               ///< draws dropped as infeasible
  std::size_t clamped = 0;               ///< future days where B hit (1 - alpha) I_U
};

/// Training part B_0..B_{t*} and testing part B_{t*+1}..B_T.
inline std::pair<Observations, Observations> train_test_split(const Observations& obs, std::size_t t_star) {
  if (!(t_star > 0 && t_star < obs.last_day()))
    throw IndexError("train_test_split: cut must satisfy 0 < t* < T");
  Observations train = obs;
  Observations test = obs;
  train.B.assign(obs.B.begin(), obs.B.begin() + static_cast<std::ptrdiff_t>(t_star + 1));
  test.B.assign(obs.B.begin() + static_cast<std::ptrdiff_t>(t_star + 1), obs.B.end());
  return {train, test};
}

/// In-sample trajectory of a posterior draw, or nullopt if infeasible.
inline std::optional<Trajectory> draw_trajectory(const ParameterState& th, const Observations& obs) {
  const auto beta = th.beta();
  return try_propagate(initial_state(th.i_u0(obs.I_D0), obs.I_D0, obs.population), beta, th.alpha(), obs.B,
                       obs.population, obs.last_day());
}

/// Re(t), t = 0..T, for every draw (rows); infeasible draws are skipped.
inline Eigen::MatrixXd reproduction_draws(const std::vector<ParameterState>& draws, const Observations& obs) {
  std::vector<Eigen::VectorXd> rows;
  for (const auto& th : draws) {
    const auto traj = draw_trajectory(th, obs);
    if (!traj) continue;
    const auto rn = reproduction_numbers(*traj, th.epidemic(obs.I_D0), obs.population);
    Eigen::VectorXd r(static_cast<Eigen::Index>(rn.size()));
    for (std::size_t t = 0; t < rn.size(); ++t) r(static_cast<Eigen::Index>(t)) = rn[t].effective;
    rows.push_back(r);
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(obs.horizon()));
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

/// Column-wise median and central band of a draws x time matrix.
inline std::vector<QuantileBand> column_bands(const Eigen::MatrixXd& m, double level = 0.95) {
  std::vector<QuantileBand> out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    std::vector<double> col(m.col(c).data(), m.col(c).data() + m.rows());
    out.push_back(quantile_band(col, level));
  }
  return out;
}

namespace detail {

struct FuturePath {
  std::vector<double> B;
  std::vector<double> Re;
  Trajectory states;
  std::size_t clamped = 0;
};

inline FuturePath simulate_future(const ParameterState& th, const Trajectory& past, const Observations& obs,
                                  const PriorConfig& prior, std::size_t horizon, Rng& rng) {
  const std::size_t n_obs = obs.horizon();
  const GpSpec gp{design_matrix(prior.beta_design, 0, n_obs), th.mu, th.sigma_beta2, th.rho};
  const Eigen::VectorXd beta_star =
      gp_sample_conditional(gp_conditional(th.beta_tilde, gp, design_matrix(prior.beta_design, n_obs, horizon)), rng);
  const Eigen::MatrixXd y_star = design_matrix(prior.gamma_design, n_obs, horizon);
  const double alpha = th.alpha();
  const double n = obs.population.size;
  const double sd = std::sqrt(th.sigma_gamma2);

  FuturePath f;
  CompartmentState v = past.back();
  double beta_prev = std::exp(th.beta_tilde(th.beta_tilde.size() - 1));
  double b_prev = obs.B.back();
  for (std::size_t h = 0; h < horizon; ++h) {
    const auto hi = static_cast<Eigen::Index>(h);
    v = step(v, beta_prev, alpha, b_prev, n);
    const double g = y_star.row(hi).dot(th.eta) + sd * std_normal(rng);
    const double cap = (1.0 - alpha) * v.I_U;
    double b = link_inverse(g, prior.link) * cap;
    if (!(b < cap)) {
      b = cap;
      ++f.clamped;
    }
    beta_prev = std::exp(beta_star(hi));
    f.B.push_back(b);
    f.Re.push_back(beta_prev * v.S / (alpha * n));
    f.states.push_back(v);
    b_prev = b;
  }
  return f;
}

inline bool path_ok(const FuturePath& f, Population n) {
  for (const auto& s : f.states)
    if (!s.non_negative() || !s.finite() || !conserves_mass(s, n)) return false;
  for (double b : f.B)
    if (!(b >= 0.0) || !std::isfinite(b)) return false;
  return true;
}

}  // namespace detail

/// Draws from the posterior predictive of the next `opt.horizon` days.
///
/// Row i uses posterior draw `source[i]` and the stream (seed, draw index).
/// A path with a non-finite or negative value is redrawn once from the same
/// stream; a second failure drops the draw and counts it in `skipped`.
inline ForecastDraws forecast(const std::vector<ParameterState>& draws, const Observations& obs,
                              const PriorConfig& prior, const ForecastOptions& opt) {
  if (opt.horizon < 1) throw DomainError("forecast: horizon must be at least 1");
  if (draws.empty()) throw DomainError("forecast: no posterior draws");
  obs.validate();
  std::vector<detail::FuturePath> paths;
  ForecastDraws out;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto past = draw_trajectory(draws[i], obs);
    if (!past) {
      ++out.skipped;
      continue;
    }
    Rng rng = make_stream(opt.seed, StreamTag::forecast, i);
    auto f = detail::simulate_future(draws[i], *past, obs, prior, opt.horizon, rng);
    if (!detail::path_ok(f, obs.population)) {
      f = detail::simulate_future(draws[i], *past, obs, prior, opt.horizon, rng);
      if (!detail::path_ok(f, obs.population)) {
        ++out.skipped;
        continue;
      }
    }
    out.clamped += f.clamped;
    out.source.push_back(i);
    paths.push_back(std::move(f));
  }
  const auto rows = static_cast<Eigen::Index>(paths.size());
  const auto cols = static_cast<Eigen::Index>(opt.horizon);
  out.B_star.resize(rows, cols);
  out.Re_star.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    auto& f = paths[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < cols; ++c) {
      out.B_star(r, c) = f.B[static_cast<std::size_t>(c)];
      out.Re_star(r, c) = f.Re[static_cast<std::size_t>(c)];
    }
    if (opt.keep_trajectories) out.trajectories.push_back(std::move(f.states));
  }
  return out;
}

}  // namespace sirgp

#endif  // SIRGP_FORECAST_HPP
