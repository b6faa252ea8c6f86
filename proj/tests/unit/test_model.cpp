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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "sirgp/model.hpp"
#include "sirgp/random.hpp"
#include "sirgp/scenarios.hpp"

namespace sirgp {
namespace {

constexpr double kN = 2e7;

TEST(Propagate, NoTransmissionDecaysGeometrically) {
  const Population n(kN);
  EpidemicParams p{800.0, std::vector<double>(11, 0.0), 0.1};
  const std::vector<double> b(11, 0.0);
  const auto traj = propagate(initial_state(800.0, 100.0, n), p, b, n);
  ASSERT_EQ(traj.size(), 11u);
  for (std::size_t t = 0; t < traj.size(); ++t) {
    EXPECT_NEAR(traj[t].I_U, 800.0 * std::pow(0.9, t), 1e-9);
    EXPECT_NEAR(traj[t].I_D, 100.0 * std::pow(0.9, t), 1e-9);
    EXPECT_EQ(traj[t].S, kN - 900.0);
    EXPECT_NEAR(traj[t].R, 900.0 * (1.0 - std::pow(0.9, t)), 1e-9);
  }
}

TEST(Propagate, DocumentationTransferOnly) {
  // alpha = 0 is outside EpidemicParams' domain, so drive step() directly.
  const CompartmentState v0{kN - 900.0, 800.0, 100.0, 0.0};
  const auto v1 = step(v0, 0.0, 0.0, 50.0, kN);
  EXPECT_EQ(v1.I_U, 750.0);
  EXPECT_EQ(v1.I_D, 150.0);
  EXPECT_EQ(v1.S, v0.S);
  EXPECT_EQ(v1.R, v0.R);
}

TEST(Propagate, MatchesHandRolledLoop) {
  Rng rng = make_stream(11, StreamTag::test);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t T = 1 + static_cast<std::size_t>(uniform01(rng) * 10.0);
    const double alpha = 0.05 + 0.3 * uniform01(rng);
    EpidemicParams p{500.0 + 1000.0 * uniform01(rng), {}, alpha};
    std::vector<double> b;
    for (std::size_t t = 0; t <= T; ++t) {
      p.beta.push_back(0.1 + 0.4 * uniform01(rng));
      b.push_back(10.0 * uniform01(rng));
    }
    const Population n(1e6);
    const auto traj = propagate(initial_state(p.I_U0, 100.0, n), p, b, n);
    double S = 1e6 - p.I_U0 - 100.0, IU = p.I_U0, ID = 100.0, R = 0.0;
    for (std::size_t t = 0; t <= T; ++t) {
      EXPECT_NEAR(traj[t].S, S, 1e-12 * 1e6);
      EXPECT_NEAR(traj[t].I_U, IU, 1e-9);
      EXPECT_NEAR(traj[t].I_D, ID, 1e-9);
      EXPECT_NEAR(traj[t].R, R, 1e-9);
      EXPECT_TRUE(conserves_mass(traj[t], n));
      const double inf = p.beta[t] * S * (IU + ID) / 1e6;
      const double nS = S - inf, nIU = (1 - alpha) * IU + inf - b[t], nID = (1 - alpha) * ID + b[t],
                   nR = R + alpha * (IU + ID);
      S = nS, IU = nIU, ID = nID, R = nR;
    }
  }
}

TEST(Propagate, NegativeCompartmentIsInfeasible) {
  const Population n(1e6);
  EpidemicParams p{100.0, {0.1, 0.1}, 0.1};
  const std::vector<double> b{500.0, 1.0};
  EXPECT_THROW(propagate(initial_state(100.0, 100.0, n), p, b, n), InfeasibleTrajectory);
}

TEST(Propagate, ScenarioOneWaveConservesMass) {
  ScenarioSpec spec;
  const auto data = generate_scenario(spec);
  const auto traj = propagate(initial_state(spec.I_U0, spec.I_D0, data.obs.population), data.truth, data.obs.B,
                              data.obs.population);
  ASSERT_EQ(traj.size(), 80u);
  for (const auto& v : traj) {
    EXPECT_TRUE(v.non_negative());
    EXPECT_TRUE(conserves_mass(v, data.obs.population));
  }
  const auto peak = std::max_element(data.obs.B.begin(), data.obs.B.end()) - data.obs.B.begin();
  EXPECT_GT(peak, 5);
  EXPECT_LT(peak, 75);
}

TEST(Reproduction, Definitions) {
  const Population n(1000.0);
  Trajectory traj{{1000.0, 0, 0, 0}, {500.0, 0, 0, 0}};
  EpidemicParams p{1.0, {0.3, 0.2}, 0.2};
  const auto r = reproduction_numbers(traj, p, n);
  EXPECT_DOUBLE_EQ(r[0].basic, 1.5);
  EXPECT_DOUBLE_EQ(r[0].effective, r[0].basic);
  EXPECT_DOUBLE_EQ(r[1].effective, 0.5);
}

TEST(Reproduction, ScenarioOneStartsAtThree) {
  const auto data = generate_scenario(ScenarioSpec{});
  EXPECT_NEAR(data.reproduction[0].basic, 3.0, 1e-8);
  EXPECT_NEAR(data.reproduction[0].effective, 3.0 * (2e7 - 900.0) / 2e7, 1e-8);
  for (const auto& r : data.reproduction) EXPECT_LE(r.effective, r.basic);
}

TEST(Reproduction, ContainmentImpliesDecline) {
  const auto data = generate_scenario(ScenarioSpec{});
  std::size_t t_star = data.reproduction.size();
  for (std::size_t t = data.reproduction.size(); t-- > 0;) {
    if (data.reproduction[t].effective >= 1.0) break;
    t_star = t;
  }
  ASSERT_LT(t_star + 1, data.trajectory.size());
  for (std::size_t t = t_star + 1; t + 1 < data.trajectory.size(); ++t)
    EXPECT_LE(data.trajectory[t + 1].infectious(), data.trajectory[t].infectious());
}

TEST(Link, KnownValues) {
  EXPECT_NEAR(link_forward(0.5, Link::logit), 0.0, 1e-15);
  EXPECT_NEAR(link_inverse(0.0, Link::cloglog), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(link_forward(0.2, Link::logit), std::log(0.25), 1e-15);
  EXPECT_NEAR(link_forward(0.975, Link::probit), 1.959963984540054, 1e-12);
  EXPECT_THROW(link_forward(0.0, Link::logit), DomainError);
  EXPECT_THROW(link_forward(1.0, Link::probit), DomainError);
}

TEST(Link, RoundTripAndMonotone) {
  for (Link link : {Link::logit, Link::probit, Link::cloglog}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double p : {1e-9, 1e-6, 1e-3, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999, 1 - 1e-6, 1 - 1e-9}) {
      const double x = link_forward(p, link);
      EXPECT_NEAR(link_inverse(x, link), p, 1e-12) << to_string(link) << " p=" << p;
      EXPECT_GT(x, prev);
      prev = x;
    }
  }
}

TEST(Likelihood, ZeroCountIsMinusInfinity) {
  Observations obs{{5.0, 0.0, 3.0}, 100.0, Population(1e6)};
  EpidemicParams p{500.0, {0.2, 0.2, 0.2}, 0.1};
  const Eigen::MatrixXd y = Eigen::MatrixXd::Ones(3, 1);
  EXPECT_EQ(log_likelihood(p, Eigen::VectorXd::Zero(1), 1.0, obs, Link::logit, y), neg_inf);
}

TEST(Likelihood, SinglePointAtMean) {
  Observations obs{{10.0}, 100.0, Population(1e6)};
  EpidemicParams p{200.0, {0.2}, 0.5};
  const double g = link_forward(10.0 / (0.5 * 200.0), Link::logit);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Ones(1, 1);
  const double ll = log_likelihood(p, Eigen::VectorXd::Constant(1, g), 1.0, obs, Link::logit, y);
  EXPECT_NEAR(ll, -0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
}

TEST(Likelihood, TruthBeatsPerturbedAlpha) {
  const ScenarioSpec spec;
  const auto data = generate_scenario(spec);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Ones(80, 1);
  const Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, spec.gamma_mean_tilde);
  const double at_truth = log_likelihood(data.truth, eta, 0.0625, data.obs, Link::cloglog, y);
  auto perturbed = data.truth;
  perturbed.alpha += 0.1;
  const double off = log_likelihood(perturbed, eta, 0.0625, data.obs, Link::cloglog, y);
  ASSERT_TRUE(std::isfinite(at_truth));
  EXPECT_GT(at_truth, off);
}

TEST(Likelihood, ContinuousInAlpha) {
  const auto data = generate_scenario(ScenarioSpec{});
  const Eigen::MatrixXd y = Eigen::MatrixXd::Ones(80, 1);
  const Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, -1.4);
  auto at = [&](double a) {
    auto p = data.truth;
    p.alpha = a;
    return log_likelihood(p, eta, 0.1, data.obs, Link::logit, y);
  };
  const double a0 = 1.0 / 9.3;
  const double f0 = at(a0);
  ASSERT_TRUE(std::isfinite(f0));
  // Differences shrink linearly with the step: no jump at a0.
  double prev_gap = 0.0;
  for (double h : {1e-4, 1e-5, 1e-6, 1e-7}) {
    const double gap = std::abs(at(a0 + h) - f0) + std::abs(at(a0 - h) - f0);
    ASSERT_TRUE(std::isfinite(gap));
    if (prev_gap > 0.0) {
      EXPECT_GT(gap / prev_gap, 0.05);
      EXPECT_LT(gap / prev_gap, 0.2);
    }
    prev_gap = gap;
  }
}

TEST(Likelihood, MatchesComponentSum) {
  const auto data = generate_scenario(ScenarioSpec{});
  const Eigen::MatrixXd y = Eigen::MatrixXd::Ones(80, 1);
  const Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, -1.2);
  const double ll = log_likelihood(data.truth, eta, 0.3, data.obs, Link::logit, y);
  double oracle = 0.0;
  for (std::size_t t = 0; t < 80; ++t) {
    const double g = data.obs.B[t] / ((1.0 - data.truth.alpha) * data.trajectory[t].I_U);
    const double r = std::log(g / (1.0 - g)) + 1.2;
    oracle += -0.5 * std::log(2.0 * std::numbers::pi * 0.3) - r * r / 0.6;
  }
  EXPECT_NEAR(ll, oracle, 1e-8 * std::abs(oracle));
}

}  // namespace
}  // namespace sirgp
