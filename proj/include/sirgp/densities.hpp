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

#ifndef SIRGP_DENSITIES_HPP
#define SIRGP_DENSITIES_HPP

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "sirgp/error.hpp"

namespace sirgp {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline constexpr double log_two_pi = 1.8378770664093454835606594728112;

/// log N(x; mean, var).
inline double normal_log_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (log_two_pi + std::log(var) + d * d / var);
}

/// Gamma with shape/rate; -inf outside (0, inf).
inline double gamma_log_pdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return neg_inf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

/// Inverse gamma with shape/rate (rate is the scale of the gamma on 1/x).
inline double inv_gamma_log_pdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return neg_inf;
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

inline double beta_log_pdf(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return neg_inf;
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

/// Gamma(shape, rate) restricted to [lower, inf).
///
/// The normalizing constant is the upper regularized incomplete gamma
/// Q(shape, rate * lower), computed once at construction.
class TruncatedGamma {
 public:
  TruncatedGamma(double shape, double rate, double lower)
      : shape_(shape), rate_(rate), lower_(lower) {
    if (!(shape > 0.0 && rate > 0.0)) throw DomainError("TruncatedGamma: shape and rate must be positive");
    const double tail = boost::math::gamma_q(shape, rate * lower);
    if (!(tail > 0.0)) throw DomainError("TruncatedGamma: no mass above the truncation point");
    log_tail_ = std::log(tail);
  }

  double log_pdf(double x) const {
    if (!(x >= lower_)) return neg_inf;
    return gamma_log_pdf(x, shape_, rate_) - log_tail_;
  }

  double shape() const { return shape_; }
  double rate() const { return rate_; }
  double lower() const { return lower_; }
  double log_tail_mass() const { return log_tail_; }

 private:
  double shape_;
  double rate_;
  double lower_;
  double log_tail_ = 0.0;
};

/// log N(x; mean, cov) by Cholesky.
inline double mvnormal_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("mvnormal_log_pdf: covariance not positive definite");
  const Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  const double log_det = 2.0 * diag.array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * log_two_pi + log_det + z.squaredNorm());
}

}  // namespace sirgp

#endif  // SIRGP_DENSITIES_HPP
