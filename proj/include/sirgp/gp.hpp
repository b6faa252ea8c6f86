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

#ifndef SIRGP_GP_HPP
#define SIRGP_GP_HPP

/** @file
 * Gaussian-process prior on the log transmission rate.
 *
 * log beta_t ~ GP(m, C) with m(t) = x_t' mu and C(t, t') = s2 rho^|t - t'|.
 * On the integer grid this kernel is exactly a stationary AR(1) process
 * around the mean, so densities and conditionals are evaluated in O(T)
 * through the innovations z_t - rho z_{t-1}, z_t = log beta_t - m(t).
 */

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sirgp/densities.hpp"
#include "sirgp/error.hpp"
#include "sirgp/random.hpp"

namespace sirgp {

/// Covariate layout for a time-indexed design matrix.
enum class DesignKind {
  intercept,       ///< x_t = (1)
  intercept_time,  ///< x_t = (1, t)
};

inline std::string_view to_string(DesignKind k) {
  return k == DesignKind::intercept ? "intercept" : "intercept+time";
}

inline DesignKind parse_design_kind(std::string_view s) {
  if (s == "intercept") return DesignKind::intercept;
  if (s == "intercept+time" || s == "time") return DesignKind::intercept_time;
  throw ConfigError("unknown design kind: " + std::string(s));
}

inline Eigen::Index design_width(DesignKind k) { return k == DesignKind::intercept ? 1 : 2; }

/// Rows x_t for t = first, ..., first + count - 1.
inline Eigen::MatrixXd design_matrix(DesignKind kind, std::size_t first, std::size_t count) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(count), design_width(kind));
  for (std::size_t i = 0; i < count; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    if (kind == DesignKind::intercept_time) x(r, 1) = static_cast<double>(first + i);
  }
  return x;
}

struct GpSpec {
  Eigen::MatrixXd X;   ///< rows x_t, t = 0..T
  Eigen::VectorXd mu;
  double sigma_beta2 = 0.1;
  double rho = 0.8;

  Eigen::VectorXd mean() const { return X * mu; }

  void validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("GpSpec: rho must lie in (0,1)");
    if (!(sigma_beta2 > 0.0)) throw DomainError("GpSpec: sigma_beta2 must be positive");
    if (X.cols() != mu.size()) throw DomainError("GpSpec: design width differs from mu");
  }
};

/// Dense kernel matrix s2 rho^|i - j| over n consecutive days.
inline Eigen::MatrixXd power_kernel(std::size_t n, double sigma2, double rho) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = sigma2 * std::pow(rho, static_cast<double>(std::abs(i - j)));
  return c;
}

/// z' K^{-1} z for the unit-variance AR(1) correlation matrix K = rho^|i-j|.
inline double ar1_quadratic_form(const Eigen::VectorXd& z, double rho) {
  if (z.size() == 0) return 0.0;
  const double inv = 1.0 / (1.0 - rho * rho);
  double q = z(0) * z(0);
  for (Eigen::Index t = 1; t < z.size(); ++t) {
    const double e = z(t) - rho * z(t - 1);
    q += e * e * inv;
  }
  return q;
}

/// Whitening rows W such that W' W = K^{-1} (unit-variance AR(1)).
/// Applied column-wise to `m`: row 0 unchanged, row t = (m_t - rho m_{t-1}) / sqrt(1 - rho^2).
inline Eigen::MatrixXd ar1_whiten(const Eigen::MatrixXd& m, double rho) {
  Eigen::MatrixXd w(m.rows(), m.cols());
  if (m.rows() == 0) return w;
  const double scale = 1.0 / std::sqrt(1.0 - rho * rho);
  w.row(0) = m.row(0);
  for (Eigen::Index t = 1; t < m.rows(); ++t) w.row(t) = (m.row(t) - rho * m.row(t - 1)) * scale;
  return w;
}

/// log N(beta_tilde; X mu, C) through the AR(1) factorization:
/// z_0 ~ N(0, s2), z_t | z_{t-1} ~ N(rho z_{t-1}, s2 (1 - rho^2)).
inline double gp_log_density(const Eigen::VectorXd& beta_tilde, const GpSpec& spec) {
  if (!(spec.rho > 0.0 && spec.rho < 1.0) || !(spec.sigma_beta2 > 0.0)) return neg_inf;
  if (beta_tilde.size() != spec.X.rows()) throw DomainError("gp_log_density: length differs from design rows");
  const Eigen::VectorXd z = beta_tilde - spec.mean();
  const auto n = static_cast<double>(z.size());
  const double innovation_var = spec.sigma_beta2 * (1.0 - spec.rho * spec.rho);
  const double log_det = std::log(spec.sigma_beta2) + (n - 1.0) * std::log(innovation_var);
  const double q = ar1_quadratic_form(z, spec.rho) / spec.sigma_beta2;
  return -0.5 * (n * log_two_pi + log_det + q);
}

/// Terms of the AR(1) log density that involve z_t, for a single-site update.
inline double ar1_site_log_terms(const Eigen::VectorXd& z, Eigen::Index t, double zt, double sigma2, double rho) {
  const double innovation_var = sigma2 * (1.0 - rho * rho);
  double lp = 0.0;
  if (t == 0) {
    lp -= 0.5 * zt * zt / sigma2;
  } else {
    const double e = zt - rho * z(t - 1);
    lp -= 0.5 * e * e / innovation_var;
  }
  if (t + 1 < z.size()) {
    const double e = z(t + 1) - rho * zt;
    lp -= 0.5 * e * e / innovation_var;
  }
  return lp;
}

struct GpConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Conditional law of the next T* values of the process given beta_tilde.
///
/// Equals N(X* mu + C* C^{-1}(beta_tilde - X mu), C** - C* C^{-1} C*'), which
/// for the power kernel reduces to AR(1) extrapolation from the last value:
/// mean_h = m(T+h) + rho^h z_T, cov_ij = s2 (rho^|i-j| - rho^(i+j)).
inline GpConditional gp_conditional(const Eigen::VectorXd& beta_tilde, const GpSpec& spec,
                                    const Eigen::MatrixXd& x_star) {
  spec.validate();
  if (beta_tilde.size() == 0 || beta_tilde.size() != spec.X.rows())
    throw DomainError("gp_conditional: beta_tilde length differs from design rows");
  if (x_star.rows() < 1) throw DomainError("gp_conditional: horizon must be at least 1");
  if (x_star.cols() != spec.mu.size()) throw DomainError("gp_conditional: future design width differs from mu");

  const Eigen::Index last = beta_tilde.size() - 1;
  const double z_last = beta_tilde(last) - spec.X.row(last).dot(spec.mu);
  const Eigen::Index h = x_star.rows();

  GpConditional out;
  out.mean = x_star * spec.mu;
  out.covariance.resize(h, h);
  for (Eigen::Index i = 0; i < h; ++i) {
    const double ri = std::pow(spec.rho, static_cast<double>(i + 1));
    out.mean(i) += ri * z_last;
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double rj = std::pow(spec.rho, static_cast<double>(j + 1));
      const double c = spec.sigma_beta2 * (std::pow(spec.rho, static_cast<double>(i - j)) - ri * rj);
      out.covariance(i, j) = c;
      out.covariance(j, i) = c;
    }
  }
  return out;
}

/// One draw from N(cond.mean, cond.covariance).
///
/// Cholesky factorization; on failure the diagonal is perturbed by 1e-10 and
/// the factorization retried once. An all-zero covariance returns the mean.
inline Eigen::VectorXd gp_sample_conditional(const GpConditional& cond, Rng& rng) {
  const Eigen::Index n = cond.mean.size();
  if (cond.covariance.rows() != n || cond.covariance.cols() != n)
    throw DomainError("gp_sample_conditional: covariance shape differs from mean");
  if (cond.covariance.isZero(0.0)) return cond.mean;

  Eigen::LLT<Eigen::MatrixXd> llt(cond.covariance);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd jittered = cond.covariance;
    jittered.diagonal().array() += 1e-10;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw NumericalError("gp_sample_conditional: covariance is not positive semidefinite");
  }
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = std_normal(rng);
  return cond.mean + llt.matrixL() * z;
}

}  // namespace sirgp

#endif  // SIRGP_GP_HPP
