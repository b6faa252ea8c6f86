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

#ifndef SIRGP_STATS_HPP
#define SIRGP_STATS_HPP

// Small summary statistics over samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "sirgp/error.hpp"

namespace sirgp {

inline double sample_mean(std::span<const double> x) {
  if (x.empty()) throw DomainError("sample_mean: empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("sample_variance: need at least two values");
  const double m = sample_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

/// Type-7 quantile (linear interpolation between order statistics).
inline double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw DomainError("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in [0,1]");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

struct QuantileBand {
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Median and central interval with coverage `level`.
inline QuantileBand quantile_band(const std::vector<double>& x, double level = 0.95) {
  const double tail = 0.5 * (1.0 - level);
  return {quantile(x, 0.5), quantile(x, tail), quantile(x, 1.0 - tail)};
}

/// Monte Carlo standard error of the mean by non-overlapping batch means.
/// Uses floor(sqrt(n)) batches unless `batches` is given.
inline double batch_means_se(std::span<const double> x, std::size_t batches = 0) {
  if (x.size() < 4) throw DomainError("batch_means_se: need at least four values");
  if (batches == 0) batches = static_cast<std::size_t>(std::sqrt(static_cast<double>(x.size())));
  batches = std::max<std::size_t>(batches, 2);
  const std::size_t len = x.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) means[b] = sample_mean(x.subspan(b * len, len));
  return std::sqrt(sample_variance(means) / static_cast<double>(batches));
}

}  // namespace sirgp

#endif  // SIRGP_STATS_HPP
