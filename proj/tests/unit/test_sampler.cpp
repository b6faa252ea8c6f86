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

#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "sirgp/sampler.hpp"
#include "sirgp/scenarios.hpp"
#include "sirgp/stats.hpp"

namespace sirgp {
namespace {

TEST(Ladder, GeometricDefault) {
  const auto l = TemperatureLadder::geometric(10);
  ASSERT_EQ(l.size(), 10u);
  for (std::size_t j = 0; j < 10; ++j) EXPECT_DOUBLE_EQ(l.deltas[j], std::pow(1.5, 9.0 - j));
  EXPECT_EQ(l.deltas.back(), 1.0);
  EXPECT_NO_THROW(l.validate());
  EXPECT_THROW((TemperatureLadder{{2.0, 2.0, 1.0}}.validate()), ConfigError);
  EXPECT_THROW((TemperatureLadder{{2.0, 1.1}}.validate()), ConfigError);
  EXPECT_THROW((TemperatureLadder{{}}.validate()), ConfigError);
}

TEST(Config, DefaultsRetainOneThousand) {
  SamplerConfig cfg;
  EXPECT_EQ(cfg.n_chains, 10u);
  EXPECT_EQ(cfg.retained(), 1000u);
  cfg.burn_in = cfg.n_iter;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SamplerConfig{};
  cfg.thin = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SamplerConfig{};
  cfg.n_chains = 3;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, KeysRoundTrip) {
  std::istringstream in("chains = 4\niterations = 900\nburn_in = 300\nthin = 3\nswap_every = 2\nseed = 42\n");
  const auto kv = KeyValueConfig::parse(in);
  const auto cfg = apply_sampler_keys(SamplerConfig{}, kv);
  EXPECT_TRUE(kv.unused_keys().empty());
  EXPECT_EQ(cfg.n_chains, 4u);
  EXPECT_EQ(cfg.ladder.deltas, TemperatureLadder::geometric(4).deltas);
  EXPECT_EQ(cfg.retained(), 200u);
  EXPECT_EQ(cfg.seed, 42u);
  std::ostringstream out;
  write_sampler_keys(out, cfg);
  std::istringstream back(out.str());
  const auto again = apply_sampler_keys(SamplerConfig{}, KeyValueConfig::parse(back));
  EXPECT_EQ(again.ladder.deltas, cfg.ladder.deltas);
  EXPECT_EQ(again.n_iter, cfg.n_iter);
  EXPECT_EQ(again.swap_every, 2u);
}

TEST(Target, TemperingLimits) {
  const double ll = -37.5, lp = -4.25;
  EXPECT_EQ(tempered_log_target(ll, lp, 1.0), ll + lp);
  EXPECT_NEAR(tempered_log_target(ll, lp, 1e9), lp, 1e-6);
  double prev = -INFINITY;
  for (double d : {1.0, 1.5, 2.25, 5.0, 38.0}) {
    const double v = tempered_log_target(ll, lp, d);
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_EQ(tempered_log_target(neg_inf, lp, 2.0), neg_inf);
}

TEST(Swap, HandComputedProbabilities) {
  // Hotter chain j at 1.5, colder chain j+1 at 1.
  EXPECT_EQ(swap_acceptance_probability(0.0, -10.0, 1.5, 1.0), 1.0);
  EXPECT_NEAR(swap_acceptance_probability(0.0, 10.0, 1.5, 1.0), std::exp(-10.0 / 3.0), 1e-12);
  EXPECT_NEAR(swap_acceptance_probability(0.0, 10.0, 1.5, 1.0), 0.0357, 5e-5);
  EXPECT_EQ(swap_acceptance_probability(-12.0, -12.0, 1.5, 1.0), 1.0);
  EXPECT_EQ(swap_log_acceptance(-12.0, -12.0, 1.5, 1.0), 0.0);
}

TEST(Swap, IdenticalStatesAlwaysSwap) {
  Rng rng = make_stream(5, StreamTag::test);
  ChainState a, b;
  a.log_lik = b.log_lik = -55.0;
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(pt_swap(a, b, 2.0, 1.0, rng));
}

TEST(Swap, EmpiricalRateMatchesFormula) {
  Rng rng = make_stream(6, StreamTag::test);
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    ChainState hot, cold;
    hot.log_lik = -50.0;
    cold.log_lik = -47.0;
    hits += pt_swap(hot, cold, 2.25, 1.5, rng);
  }
  const double expect = std::min(1.0, std::exp((1.0 / 2.25 - 1.0 / 1.5) * 3.0));
  EXPECT_NEAR(static_cast<double>(hits) / n, expect, 4.0 * std::sqrt(expect * (1 - expect) / n));
}

struct Fixture {
  ScenarioData data = generate_scenario(ScenarioSpec{});
  PriorDensity prior{default_prior_config()};
  ModelDesign design = make_design(default_prior_config(), 80);
  EpidemicModel model{data.obs, Link::logit};
};

SamplerConfig small_config(std::size_t chains, std::size_t iters, std::size_t burn, std::size_t thin) {
  SamplerConfig cfg;
  cfg.n_chains = chains;
  cfg.ladder = TemperatureLadder::geometric(chains);
  cfg.n_iter = iters;
  cfg.burn_in = burn;
  cfg.thin = thin;
  cfg.seed = 7;
  return cfg;
}

TEST(Sweep, ZeroScaleKeepsMetropolisBlocks) {
  Fixture f;
  const SweepContext<EpidemicModel> ctx(f.model, f.prior, f.design);
  Rng rng = make_stream(8, StreamTag::test);
  ChainState c = detail::initialize_chain(ctx, SamplerConfig{}, rng);
  ChainScales zero{0.0, std::vector<double>(80, 0.0), 0.0, 0.0};
  ModelCache scratch = c.cache;
  for (int i = 0; i < 5; ++i) {
    const auto before = c.theta;
    const auto r = gibbs_sweep(c, 1.0, ctx, zero, scratch, rng);
    EXPECT_TRUE(r.all_accepted());
    // Zero steps on the transformed scales round-trip through exp/log.
    EXPECT_NEAR(c.theta.r0, before.r0, 1e-14 * before.r0);
    EXPECT_NEAR(c.theta.alpha_inv, before.alpha_inv, 1e-14 * before.alpha_inv);
    EXPECT_NEAR(c.theta.rho, before.rho, 1e-14);
    EXPECT_EQ(c.theta.beta_tilde, before.beta_tilde);
  }
}

TEST(Sweep, HugeScaleRejects) {
  Fixture f;
  const SweepContext<EpidemicModel> ctx(f.model, f.prior, f.design);
  Rng rng = make_stream(9, StreamTag::test);
  ChainState c = detail::initialize_chain(ctx, SamplerConfig{}, rng);
  ChainScales wide{50.0, std::vector<double>(80, 50.0), 50.0, 50.0};
  ModelCache scratch = c.cache;
  std::size_t accepted = 0, trials = 0;
  for (int i = 0; i < 200; ++i) {
    const auto r = gibbs_sweep(c, 1.0, ctx, wide, scratch, rng);
    accepted += r.r0 + r.alpha_inv + r.beta_accepted;
    trials += 2 + r.beta_sites;
  }
  EXPECT_LT(static_cast<double>(accepted) / trials, 0.02);
}

TEST(Sweep, MuDrawMatchesConjugateOracle) {
  Fixture f;
  const SweepContext<EpidemicModel> ctx(f.model, f.prior, f.design);
  Rng rng = make_stream(10, StreamTag::test);
  const ChainState start = detail::initialize_chain(ctx, SamplerConfig{}, rng);
  ChainScales zero{0.0, std::vector<double>(80, 0.0), 0.0, 0.0};

  // Oracle: dense GP covariance, mu | beta_tilde ~ N(P^{-1} h, P^{-1}).
  const auto& th = start.theta;
  const Eigen::MatrixXd cinv = power_kernel(80, th.sigma_beta2, th.rho).inverse();
  const auto& pc = f.prior.config();
  const Eigen::MatrixXd p = pc.mu.cov.inverse() + f.design.X.transpose() * cinv * f.design.X;
  const Eigen::VectorXd h = pc.mu.cov.inverse() * pc.mu.mean + f.design.X.transpose() * cinv * th.beta_tilde;
  const Eigen::VectorXd mean = p.ldlt().solve(h);
  const Eigen::MatrixXd cov = p.inverse();

  const int n = 20000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    ChainState c = start;
    ModelCache scratch = c.cache;
    gibbs_sweep(c, 1.0, ctx, zero, scratch, rng);
    sum += c.theta.mu;
  }
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(sum(k) / n, mean(k), 4.0 * std::sqrt(cov(k, k) / n)) << k;
}

TEST(Sweep, TemperedResidualBlocksMatchGridOracle) {
  // Tempered conjugate updates: likelihood statistics are scaled by 1/delta.
  Rng data_rng = make_stream(11, StreamTag::test);
  std::vector<double> g(30);
  for (double& v : g) v = normal(data_rng, -1.4, 0.6);
  const FixedResidualModel model(g);
  const PriorDensity prior(default_prior_config());
  const ModelDesign design = make_design(default_prior_config(), g.size());
  const SweepContext<FixedResidualModel> ctx(model, prior, design);
  for (double delta : {1.0, 3.0}) {
    Rng rng = make_stream(12, StreamTag::test, static_cast<std::uint64_t>(delta));
    ChainState c = detail::initialize_chain(ctx, SamplerConfig{}, rng);
    ChainScales scales{0.1, std::vector<double>(g.size(), 0.1), 0.1, 0.3};
    ModelCache scratch = c.cache;
    std::vector<double> eta, s2;
    for (int i = 0; i < 40000; ++i) {
      gibbs_sweep(c, delta, ctx, scales, scratch, rng);
      if (i >= 1000) {
        eta.push_back(c.theta.eta(0));
        s2.push_back(c.theta.sigma_gamma2);
      }
    }
    const auto oracle = testing::grid_posterior(g, 0.0, 1.0, 1.0, 1.0, delta);
    EXPECT_NEAR(sample_mean(eta), oracle.eta_mean, 3.5 * batch_means_se(eta)) << delta;
    EXPECT_NEAR(sample_mean(s2), oracle.sigma2_mean, 3.5 * batch_means_se(s2)) << delta;
  }
}

/// Link-scale rates c_t - log r0: scaling I_U0 shifts every rate, which eta
/// can absorb. This is the ridge the joint (r0, eta) block is built for.
class ShiftedResidualModel {
 public:
  explicit ShiftedResidualModel(std::vector<double> base) : c_(std::move(base)) {}

  std::size_t horizon() const { return c_.size(); }
  double i_d0() const { return 1.0; }

  bool evaluate(const ParameterState& th, std::span<const double>, ModelCache& out) const {
    out.gamma_tilde.resize(c_.size());
    for (std::size_t t = 0; t < c_.size(); ++t) out.gamma_tilde[t] = c_[t] - std::log(th.r0);
    return true;
  }
  bool evaluate_from(const ParameterState& th, std::span<const double>, std::size_t from, const ModelCache&,
                     ModelCache& out) const {
    out.gamma_tilde.resize(c_.size());
    for (std::size_t t = from; t < c_.size(); ++t) out.gamma_tilde[t] = c_[t] - std::log(th.r0);
    return true;
  }
  bool initial_guess(ParameterState&) const { return true; }

 private:
  std::vector<double> c_;
};

TEST(Sweep, JointRateAndLevelBlockMatchesGridOracle) {
  Rng data_rng = make_stream(14, StreamTag::test);
  std::vector<double> base(30);
  for (double& v : base) v = normal(data_rng, 0.3, 0.4);
  const ShiftedResidualModel model(base);
  const PriorConfig pc = default_prior_config();
  const PriorDensity prior(pc);
  const ModelDesign design = make_design(pc, base.size());
  const SweepContext<ShiftedResidualModel> ctx(model, prior, design);
  for (double delta : {1.0, 2.5}) {
    Rng rng = make_stream(15, StreamTag::test, static_cast<std::uint64_t>(delta * 2));
    ChainState c = detail::initialize_chain(ctx, SamplerConfig{}, rng);
    ChainScales scales{0.6, std::vector<double>(base.size(), 0.1), 0.1, 0.3};
    ModelCache scratch = c.cache;
    std::vector<double> log_r0, eta;
    for (int i = 0; i < 40000; ++i) {
      gibbs_sweep(c, delta, ctx, scales, scratch, rng);
      if (i >= 1000) {
        log_r0.push_back(std::log(c.theta.r0));
        eta.push_back(c.theta.eta(0));
      }
    }
    const auto oracle = testing::ridge_posterior(base, pc.i_u0_ratio.shape, pc.i_u0_ratio.rate, pc.eta.mean(0),
                                                 pc.eta.cov(0, 0), pc.sigma_gamma2.shape, pc.sigma_gamma2.rate, delta);
    EXPECT_NEAR(sample_mean(log_r0), oracle.log_r0_mean, 3.5 * batch_means_se(log_r0)) << delta;
    EXPECT_NEAR(sample_mean(eta), oracle.eta_mean, 3.5 * batch_means_se(eta)) << delta;
  }
}

TEST(Sweep, ZeroResidualsShrinkObservationVariance) {
  const FixedResidualModel model(std::vector<double>(40, 0.0));
  const PriorDensity prior(default_prior_config());
  const ModelDesign design = make_design(default_prior_config(), 40);
  const SweepContext<FixedResidualModel> ctx(model, prior, design);
  Rng rng = make_stream(13, StreamTag::test);
  ChainState c = detail::initialize_chain(ctx, SamplerConfig{}, rng);
  ChainScales scales{0.1, std::vector<double>(40, 0.1), 0.1, 0.3};
  ModelCache scratch = c.cache;
  std::vector<double> s2;
  for (int i = 0; i < 5000; ++i) {
    gibbs_sweep(c, 1.0, ctx, scales, scratch, rng);
    if (i >= 500) s2.push_back(c.theta.sigma_gamma2);
  }
  // Prior median of Inv-Ga(1,1) is 1/ln 2.
  EXPECT_LT(sample_mean(s2), 0.1);
  EXPECT_LT(quantile(s2, 0.99), 1.0 / std::log(2.0));
}

TEST(Run, DrawCountAndFiniteness) {
  Fixture f;
  const auto cfg = small_config(3, 1500, 500, 7);
  const auto d = run_sampler(f.model, f.prior, f.design, cfg);
  EXPECT_EQ(d.draws.size(), cfg.retained());
  EXPECT_EQ(d.draws.size(), (1500u - 500u) / 7u);
  ASSERT_EQ(d.swap_acceptance.size(), 2u);
  for (double a : d.swap_acceptance) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
  for (std::size_t i = 0; i < d.draws.size(); ++i) {
    const auto& th = d.draws[i];
    EXPECT_TRUE(th.in_support());
    const double lp = log_prior(th, f.prior, f.design.X, f.data.obs.I_D0);
    const double ll = state_log_likelihood(f.model, th, f.design);
    EXPECT_TRUE(std::isfinite(lp + ll));
    EXPECT_NEAR(ll, d.log_likelihood[i], 1e-6 * std::abs(ll));
  }
}

TEST(Run, SeededDeterminismAcrossThreads) {
  Fixture f;
  auto cfg = small_config(4, 400, 100, 5);
  const auto a = run_sampler(f.model, f.prior, f.design, cfg);
  const auto b = run_sampler(f.model, f.prior, f.design, cfg);
  cfg.threads = 3;
  const auto c = run_sampler(f.model, f.prior, f.design, cfg);
  ASSERT_EQ(a.draws.size(), b.draws.size());
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    EXPECT_TRUE(a.draws[i] == b.draws[i]);
    EXPECT_TRUE(a.draws[i] == c.draws[i]);
  }
  EXPECT_EQ(a.swap_acceptance, c.swap_acceptance);
}

TEST(Run, SingleChainEqualsPlainSampler) {
  Fixture f;
  const auto cfg = small_config(1, 600, 200, 4);
  const auto pt = run_sampler(f.model, f.prior, f.design, cfg);
  const auto plain = run_gibbs_sampler(f.model, f.prior, f.design, cfg);
  ASSERT_EQ(pt.draws.size(), plain.draws.size());
  for (std::size_t i = 0; i < pt.draws.size(); ++i) EXPECT_TRUE(pt.draws[i] == plain.draws[i]);
  EXPECT_EQ(pt.log_likelihood, plain.log_likelihood);
}

TEST(Run, AdaptationFreezesAfterBurnIn) {
  Fixture f;
  const SweepContext<EpidemicModel> ctx(f.model, f.prior, f.design);
  const auto cfg = small_config(1, 400, 200, 1);
  detail::Slot s;
  detail::init_slot(s, 0, 1.0, ctx, cfg);
  for (std::size_t i = 1; i <= 200; ++i) detail::advance_slot(s, i, ctx, cfg);
  const ChainScales frozen = s.scales;
  EXPECT_NE(frozen.log_r0, cfg.scales.log_r0);
  for (std::size_t i = 201; i <= 400; ++i) detail::advance_slot(s, i, ctx, cfg);
  EXPECT_EQ(s.scales.log_r0, frozen.log_r0);
  EXPECT_EQ(s.scales.log_alpha_inv, frozen.log_alpha_inv);
  EXPECT_EQ(s.scales.logit_rho, frozen.logit_rho);
  EXPECT_EQ(s.scales.beta_tilde, frozen.beta_tilde);
}

TEST(Run, ScenarioOneSwapsMix) {
  Fixture f;
  const auto d = run_sampler(f.model, f.prior, f.design, small_config(4, 20000, 10000, 10));
  for (double a : d.swap_acceptance) {
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

/// Observation model with no feasible state at all.
struct InfeasibleModel {
  std::size_t horizon() const { return 5; }
  double i_d0() const { return 100.0; }
  bool evaluate(const ParameterState&, std::span<const double>, ModelCache&) const { return false; }
  bool evaluate_from(const ParameterState&, std::span<const double>, std::size_t, const ModelCache&,
                     ModelCache&) const {
    return false;
  }
  bool initial_guess(ParameterState&) const { return false; }
};

TEST(Run, InitializationFailureIsFatal) {
  const InfeasibleModel model;
  const PriorDensity prior(default_prior_config());
  const auto cfg = small_config(2, 10, 5, 1);
  EXPECT_THROW(run_sampler(model, prior, make_design(default_prior_config(), 5), cfg), NumericalError);
}

TEST(Run, DesignMismatchIsConfigError) {
  Fixture f;
  EXPECT_THROW(run_sampler(f.model, f.prior, make_design(default_prior_config(), 10), small_config(1, 10, 5, 1)),
               ConfigError);
}

}  // namespace
}  // namespace sirgp
