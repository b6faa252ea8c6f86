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
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "sirgp/diagnostics.hpp"
#include "sirgp/random.hpp"
#include "sirgp/scenarios.hpp"

namespace sirgp {
namespace {

std::vector<double> iid_chain(Rng& rng, std::size_t n, double level, double sd) {
  std::vector<double> x(n);
  for (double& v : x) v = level + sd * std_normal(rng);
  return x;
}

TEST(Geweke, StationaryChainIsQuiet) {
  int quiet = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(100 + r, StreamTag::test);
    const auto x = iid_chain(rng, 10000, 5.0, 1e-6);
    quiet += std::abs(geweke_z(x).z_score) < 3.0;
  }
  EXPECT_GE(quiet, static_cast<int>(0.99 * reps));
}

TEST(Geweke, LevelShiftIsFlagged) {
  Rng rng = make_stream(1, StreamTag::test);
  auto x = iid_chain(rng, 2000, 0.0, 1.0);
  for (std::size_t i = 1000; i < x.size(); ++i) x[i] += 10.0;
  EXPECT_GT(std::abs(geweke_z(x).z_score), 4.0);
}

TEST(Geweke, AffineInvariant) {
  Rng rng = make_stream(2, StreamTag::test);
  auto x = iid_chain(rng, 1000, 0.0, 1.0);
  for (std::size_t i = 1; i < x.size(); ++i) x[i] = 0.7 * x[i - 1] + x[i];
  const double z = geweke_z(x).z_score;
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return 3.0 * v - 17.0; });
  EXPECT_NEAR(geweke_z(y).z_score, z, 1e-8 * std::max(1.0, std::abs(z)));
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return -0.5 * v + 2.0; });
  EXPECT_NEAR(geweke_z(y).z_score, -z, 1e-8 * std::max(1.0, std::abs(z)));
}

TEST(Geweke, Preconditions) {
  EXPECT_THROW(geweke_z(std::vector<double>(99, 1.0)), DomainError);
  EXPECT_THROW(geweke_z(std::vector<double>(500, 1.0)), DegenerateChain);
  Rng rng = make_stream(3, StreamTag::test);
  const auto r = geweke_z(iid_chain(rng, 500, 0.0, 1.0));
  EXPECT_EQ(r.first, 0.1);
  EXPECT_EQ(r.last, 0.5);
}

TEST(ChiSquare, ThresholdMatchesNumericalCdf) {
  const double q = chi_square_quantile(0.95, 4.0);
  EXPECT_NEAR(q, 9.4877, 1e-4);
  // chi^2_4 density is x e^{-x/2} / 4.
  boost::math::quadrature::tanh_sinh<double> integ;
  const double mass = integ.integrate([](double x) { return x * std::exp(-0.5 * x) / 4.0; }, 0.0, q);
  EXPECT_NEAR(mass, 0.95, 1e-10);
}

TEST(Omega, PerfectCalibrationIsZero) {
  const std::vector<double> edges{0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> u;
  for (int i = 0; i < 80; ++i) u.push_back((i % 5) * 0.2 + 0.1);
  EXPECT_NEAR(omega_statistic(u, edges), 0.0, 1e-12);
}

TEST(Omega, HandComputedAndPermutationInvariant) {
  const std::vector<double> edges{0, 0.2, 0.4, 0.6, 0.8, 1.0};
  // Counts (4, 0, 2, 2, 2), expected 2 each: (4 + 4 + 0 + 0 + 0) / 2 = 4.
  std::vector<double> u{0.01, 0.05, 0.1, 0.15, 0.5, 0.55, 0.7, 0.75, 0.9, 0.95};
  EXPECT_DOUBLE_EQ(omega_statistic(u, edges), 4.0);
  std::reverse(u.begin(), u.end());
  EXPECT_DOUBLE_EQ(omega_statistic(u, edges), 4.0);
  std::rotate(u.begin(), u.begin() + 3, u.end());
  EXPECT_DOUBLE_EQ(omega_statistic(u, edges), 4.0);
}

/// A posterior draw equal to the generating parameters of `data`.
ParameterState truth_draw(const ScenarioData& data, const ScenarioSpec& spec) {
  ParameterState th;
  th.r0 = spec.I_U0 / spec.I_D0;
  th.alpha_inv = 1.0 / spec.alpha;
  th.beta_tilde.resize(static_cast<Eigen::Index>(data.truth.beta.size()));
  for (std::size_t t = 0; t < data.truth.beta.size(); ++t)
    th.beta_tilde(static_cast<Eigen::Index>(t)) = std::log(data.truth.beta[t]);
  th.mu = Eigen::Vector2d(-1.3, 0.0);
  th.eta = Eigen::VectorXd::Constant(1, spec.gamma_mean_tilde);
  th.sigma_gamma2 = spec.gamma_sd * spec.gamma_sd;
  return th;
}

TEST(BayesianChi2, NullDistributionCentredOnDof) {
  std::vector<double> omega;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    ScenarioSpec spec;
    spec.seed = seed;
    spec.transform = RateTransform::logit_inverse;
    const auto data = generate_scenario(spec);
    const auto r = bayesian_chi2({truth_draw(data, spec)}, data.obs, Link::logit, Eigen::MatrixXd::Ones(80, 1));
    ASSERT_EQ(r.omega_draws.size(), 1u);
    omega.push_back(r.omega_draws[0]);
  }
  const double m = sample_mean(omega);
  EXPECT_GT(m, 4.0 * 0.8);
  EXPECT_LT(m, 4.0 * 1.2);
}

TEST(BayesianChi2, ResultShapeAndSkips) {
  ScenarioSpec spec;
  spec.transform = RateTransform::logit_inverse;
  const auto data = generate_scenario(spec);
  auto good = truth_draw(data, spec);
  auto bad = good;
  bad.r0 = 1e-3;  // I_U0 too small for B_0
  const auto r = bayesian_chi2({good, bad, good}, data.obs, Link::logit, Eigen::MatrixXd::Ones(80, 1));
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.omega_draws.size(), 2u);
  EXPECT_EQ(r.bin_edges, (std::vector<double>{0, 0.2, 0.4, 0.6, 0.8, 1.0}));
  double total = 0.0;
  for (double p : r.bin_probs) total += p;
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_GE(r.exceed_proportion, 0.0);
  EXPECT_LE(r.exceed_proportion, 1.0);
  for (double w : r.omega_draws) EXPECT_GE(w, 0.0);
  EXPECT_NEAR(r.threshold, 9.4877, 1e-4);
}

TEST(BayesianChi2, PitValuesAreNormalCdfOfResiduals) {
  ScenarioSpec spec;
  spec.transform = RateTransform::logit_inverse;
  const auto data = generate_scenario(spec);
  const auto th = truth_draw(data, spec);
  const auto u = pit_values(th, data.obs, Link::logit, Eigen::MatrixXd::Ones(80, 1));
  ASSERT_EQ(u.size(), 80u);
  // The truth reproduces the generating draws exactly.
  for (std::size_t t = 0; t < 80; ++t) {
    const double z = (data.gamma_tilde[t] - spec.gamma_mean_tilde) / spec.gamma_sd;
    EXPECT_NEAR(u[t], 0.5 * std::erfc(-z / std::sqrt(2.0)), 1e-6);
  }
}

TEST(QqTable, SortedAgainstChiSquareQuantiles) {
  const auto q = chi2_qq_table({5.0, 1.0, 3.0, 9.0}, 4.0);
  ASSERT_EQ(q.size(), 4u);
  const boost::math::chi_squared chi(4.0);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(q[i].theoretical, boost::math::quantile(chi, (i + 0.5) / 4.0), 1e-12);
    if (i) {
      EXPECT_GE(q[i].empirical, q[i - 1].empirical);
      EXPECT_GT(q[i].theoretical, q[i - 1].theoretical);
    }
  }
}

}  // namespace
}  // namespace sirgp
