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

#ifndef SIRGP_RANDOM_HPP
#define SIRGP_RANDOM_HPP

// Random streams and variate generation.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. Variates come from Boost.Random, whose algorithms are header code
// and therefore identical on every platform, unlike the std:: distributions.

#include <cstdint>
#include <random>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace sirgp {

using Rng = std::mt19937_64;

/// Purpose tags that keep independent streams apart for the same seed.
enum class StreamTag : std::uint32_t {
  chain = 1,
  swap = 2,
  forecast = 3,
  scenario = 4,
  stochastic = 5,
  test = 99,
};

/// Independent engine for (seed, tag, index). Uses std::seed_seq, whose
/// mixing algorithm is specified exactly by the standard.
inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(index & 0xffffffffu),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  boost::random::uniform_01<double> u;
  double x = u(rng);
  while (x <= 0.0) x = u(rng);
  return x;
}

inline double std_normal(Rng& rng) {
  boost::random::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

inline double normal(Rng& rng, double mean, double sd) { return mean + sd * std_normal(rng); }

/// Gamma with shape/rate parameterization.
inline double gamma_shape_rate(Rng& rng, double shape, double rate) {
  boost::random::gamma_distribution<double> g(shape, 1.0);
  return g(rng) / rate;
}

/// Inverse gamma: density b^a / Gamma(a) x^(-a-1) exp(-b/x).
inline double inv_gamma(Rng& rng, double shape, double rate) {
  return 1.0 / gamma_shape_rate(rng, shape, rate);
}

inline double beta_variate(Rng& rng, double a, double b) {
  const double x = gamma_shape_rate(rng, a, 1.0);
  const double y = gamma_shape_rate(rng, b, 1.0);
  return x / (x + y);
}

inline std::int64_t binomial(Rng& rng, std::int64_t trials, double p) {
  if (trials <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  boost::random::binomial_distribution<std::int64_t, double> b(trials, p);
  return b(rng);
}

}  // namespace sirgp

#endif  // SIRGP_RANDOM_HPP
