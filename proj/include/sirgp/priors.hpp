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

#ifndef SIRGP_PRIORS_HPP
#define SIRGP_PRIORS_HPP

#include <cmath>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sirgp/config_file.hpp"
#include "sirgp/densities.hpp"
#include "sirgp/error.hpp"
#include "sirgp/gp.hpp"
#include "sirgp/model.hpp"

namespace sirgp {

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

/// Inverse gamma; `rate` is the rate of the gamma law on the reciprocal.
struct InvGammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;
};

struct NormalPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Hyperparameters of every prior in the model, plus the link function.
struct PriorConfig {
  GammaPrior i_u0_ratio{5.0, 1.0};   ///< I_U0 / I_D0
  NormalPrior mu;                    ///< GP mean coefficients
  InvGammaPrior sigma_beta2{11.0, 1.0};
  BetaPrior rho{4.0, 1.0};
  GammaPrior alpha_inv{325.5, 35.0};  ///< truncated to alpha_inv >= 1
  NormalPrior eta;                    ///< diagnosis-rate coefficients
  InvGammaPrior sigma_gamma2{1.0, 1.0};
  Link link = Link::logit;
  DesignKind beta_design = DesignKind::intercept_time;
  DesignKind gamma_design = DesignKind::intercept;

  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("prior parameter must be positive: ") + what);
    };
    positive(i_u0_ratio.shape, "i_u0_ratio_shape");
    positive(i_u0_ratio.rate, "i_u0_ratio_rate");
    positive(sigma_beta2.shape, "sigma_beta2_shape");
    positive(sigma_beta2.rate, "sigma_beta2_rate");
    positive(rho.a, "rho_a");
    positive(rho.b, "rho_b");
    positive(alpha_inv.shape, "alpha_inv_shape");
    positive(alpha_inv.rate, "alpha_inv_rate");
    positive(sigma_gamma2.shape, "sigma_gamma2_shape");
    positive(sigma_gamma2.rate, "sigma_gamma2_rate");
    auto spd = [](const NormalPrior& p, Eigen::Index width, const char* what) {
      if (p.mean.size() != width || p.cov.rows() != width || p.cov.cols() != width)
        throw ConfigError(std::string(what) + ": dimension does not match its design");
      if (!p.cov.isApprox(p.cov.transpose())) throw ConfigError(std::string(what) + ": covariance not symmetric");
      Eigen::LLT<Eigen::MatrixXd> llt(p.cov);
      if (llt.info() != Eigen::Success) throw ConfigError(std::string(what) + ": covariance not positive definite");
    };
    spd(mu, design_width(beta_design), "mu prior");
    spd(eta, design_width(gamma_design), "eta prior");
  }
};

/// Defaults: Ga(5,1) on I_U0/I_D0; N((-1.31, 0), diag(0.3^2, 1)) on mu;
/// Inv-Ga(11,1) on sigma_beta2; Beta(4,1) on rho; Ga(325.5, 35) truncated
/// to [1, inf) on 1/alpha; N(0,1) on eta; Inv-Ga(1,1) on sigma_gamma2; logit.
inline PriorConfig default_prior_config() {
  PriorConfig cfg;
  cfg.mu.mean = Eigen::Vector2d(-1.31, 0.0);
  cfg.mu.cov = Eigen::Vector2d(0.3 * 0.3, 1.0).asDiagonal();
  cfg.eta.mean = Eigen::VectorXd::Zero(1);
  cfg.eta.cov = Eigen::MatrixXd::Identity(1, 1);
  return cfg;
}

/// Named sensitivity settings.
struct NamedPrior {
  std::string name;
  PriorConfig config;
};

/// Probit link, cloglog link, Ga(46.5, 5) on 1/alpha, Ga(700, 35) on 1/alpha.
inline std::vector<NamedPrior> sensitivity_presets() {
  std::vector<NamedPrior> out;
  auto probit = default_prior_config();
  probit.link = Link::probit;
  out.push_back({"probit", probit});
  auto cloglog = default_prior_config();
  cloglog.link = Link::cloglog;
  out.push_back({"cloglog", cloglog});
  auto wide = default_prior_config();
  wide.alpha_inv = {46.5, 5.0};
  out.push_back({"alpha-var", wide});
  auto shifted = default_prior_config();
  shifted.alpha_inv = {700.0, 35.0};
  out.push_back({"alpha-mean20", shifted});
  return out;
}

inline std::vector<std::string> preset_names() {
  return {"default", "probit", "cloglog", "alpha-var", "alpha-mean20"};
}

inline PriorConfig prior_preset(std::string_view name) {
  if (name == "default") return default_prior_config();
  for (auto& p : sensitivity_presets())
    if (p.name == name) return p.config;
  throw ConfigError("unknown prior preset: " + std::string(name));
}

/// Applies prior keys from a config file on top of `base`.
///
/// Keys: prior_preset, i_u0_ratio_shape, i_u0_ratio_rate, mu_mean, mu_cov,
/// sigma_beta2_shape, sigma_beta2_rate, rho_a, rho_b, alpha_inv_shape,
/// alpha_inv_rate, eta_mean, eta_cov, sigma_gamma2_shape, sigma_gamma2_rate,
/// link, beta_design, gamma_design. Vectors are comma separated, matrix rows
/// are separated by ';'.
inline PriorConfig apply_prior_keys(PriorConfig cfg, const KeyValueConfig& kv) {
  if (const auto* p = kv.find("prior_preset")) cfg = prior_preset(*p);
  cfg.i_u0_ratio.shape = kv.get_double("i_u0_ratio_shape", cfg.i_u0_ratio.shape);
  cfg.i_u0_ratio.rate = kv.get_double("i_u0_ratio_rate", cfg.i_u0_ratio.rate);
  if (const auto* v = kv.find("beta_design")) {
    cfg.beta_design = parse_design_kind(*v);
    if (cfg.beta_design == DesignKind::intercept) {
      cfg.mu.mean = cfg.mu.mean.head(1).eval();
      cfg.mu.cov = cfg.mu.cov.topLeftCorner(1, 1).eval();
    }
  }
  if (const auto* v = kv.find("gamma_design")) {
    cfg.gamma_design = parse_design_kind(*v);
    if (cfg.gamma_design == DesignKind::intercept_time && cfg.eta.mean.size() == 1) {
      cfg.eta.mean = Eigen::Vector2d(cfg.eta.mean(0), 0.0);
      cfg.eta.cov = Eigen::Vector2d(cfg.eta.cov(0, 0), 1.0).asDiagonal();
    }
  }
  if (const auto* v = kv.find("mu_mean")) cfg.mu.mean = parse_vector(*v, "mu_mean");
  if (const auto* v = kv.find("mu_cov")) cfg.mu.cov = parse_matrix(*v, "mu_cov");
  cfg.sigma_beta2.shape = kv.get_double("sigma_beta2_shape", cfg.sigma_beta2.shape);
  cfg.sigma_beta2.rate = kv.get_double("sigma_beta2_rate", cfg.sigma_beta2.rate);
  cfg.rho.a = kv.get_double("rho_a", cfg.rho.a);
  cfg.rho.b = kv.get_double("rho_b", cfg.rho.b);
  cfg.alpha_inv.shape = kv.get_double("alpha_inv_shape", cfg.alpha_inv.shape);
  cfg.alpha_inv.rate = kv.get_double("alpha_inv_rate", cfg.alpha_inv.rate);
  if (const auto* v = kv.find("eta_mean")) cfg.eta.mean = parse_vector(*v, "eta_mean");
  if (const auto* v = kv.find("eta_cov")) cfg.eta.cov = parse_matrix(*v, "eta_cov");
  cfg.sigma_gamma2.shape = kv.get_double("sigma_gamma2_shape", cfg.sigma_gamma2.shape);
  cfg.sigma_gamma2.rate = kv.get_double("sigma_gamma2_rate", cfg.sigma_gamma2.rate);
  if (const auto* v = kv.find("link")) {
    try {
      cfg.link = parse_link(*v);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline void write_prior_keys(std::ostream& os, const PriorConfig& cfg) {
  os.precision(17);
  os << "i_u0_ratio_shape = " << cfg.i_u0_ratio.shape << '\n'
     << "i_u0_ratio_rate = " << cfg.i_u0_ratio.rate << '\n'
     << "beta_design = " << to_string(cfg.beta_design) << '\n'
     << "gamma_design = " << to_string(cfg.gamma_design) << '\n'
     << "mu_mean = " << format_vector(cfg.mu.mean) << '\n'
     << "mu_cov = " << format_matrix(cfg.mu.cov) << '\n'
     << "sigma_beta2_shape = " << cfg.sigma_beta2.shape << '\n'
     << "sigma_beta2_rate = " << cfg.sigma_beta2.rate << '\n'
     << "rho_a = " << cfg.rho.a << '\n'
     << "rho_b = " << cfg.rho.b << '\n'
     << "alpha_inv_shape = " << cfg.alpha_inv.shape << '\n'
     << "alpha_inv_rate = " << cfg.alpha_inv.rate << '\n'
     << "eta_mean = " << format_vector(cfg.eta.mean) << '\n'
     << "eta_cov = " << format_matrix(cfg.eta.cov) << '\n'
     << "sigma_gamma2_shape = " << cfg.sigma_gamma2.shape << '\n'
     << "sigma_gamma2_rate = " << cfg.sigma_gamma2.rate << '\n'
     << "link = " << to_string(cfg.link) << '\n';
}

/// Unknowns of the model, one full sampler state.
///
/// I_U0 is carried on the ratio scale r0 = I_U0 / I_D0 and alpha through its
/// reciprocal, the mean infectious period, because the priors are stated on
/// those scales.
struct ParameterState {
  double r0 = 5.0;
  Eigen::VectorXd beta_tilde;  ///< log beta_t, t = 0..T
  double alpha_inv = 9.3;
  Eigen::VectorXd mu;
  double sigma_beta2 = 0.1;
  double rho = 0.8;
  Eigen::VectorXd eta;
  double sigma_gamma2 = 1.0;

  double alpha() const { return 1.0 / alpha_inv; }
  double i_u0(double i_d0) const { return r0 * i_d0; }

  std::vector<double> beta() const {
    std::vector<double> b(static_cast<std::size_t>(beta_tilde.size()));
    for (Eigen::Index t = 0; t < beta_tilde.size(); ++t) b[static_cast<std::size_t>(t)] = std::exp(beta_tilde(t));
    return b;
  }

  EpidemicParams epidemic(double i_d0) const { return {i_u0(i_d0), beta(), alpha()}; }

  bool in_support() const {
    return r0 > 0.0 && alpha_inv >= 1.0 && sigma_beta2 > 0.0 && rho > 0.0 && rho < 1.0 && sigma_gamma2 > 0.0 &&
           std::isfinite(r0) && std::isfinite(alpha_inv) && std::isfinite(sigma_beta2) &&
           std::isfinite(sigma_gamma2) && beta_tilde.allFinite() && mu.allFinite() && eta.allFinite();
  }

  friend bool operator==(const ParameterState& a, const ParameterState& b) {
    return a.r0 == b.r0 && a.beta_tilde == b.beta_tilde && a.alpha_inv == b.alpha_inv && a.mu == b.mu &&
           a.sigma_beta2 == b.sigma_beta2 && a.rho == b.rho && a.eta == b.eta && a.sigma_gamma2 == b.sigma_gamma2;
  }
};

/// Prior evaluator with the truncation constant of the 1/alpha prior cached.
class PriorDensity {
 public:
  explicit PriorDensity(PriorConfig cfg)
      : cfg_(std::move(cfg)), alpha_inv_(cfg_.alpha_inv.shape, cfg_.alpha_inv.rate, 1.0) {
    cfg_.validate();
  }

  const PriorConfig& config() const { return cfg_; }

  /// log Ga(r0) - log I_D0: the density of I_U0 = r0 I_D0.
  double i_u0(double r0, double i_d0) const {
    return gamma_log_pdf(r0, cfg_.i_u0_ratio.shape, cfg_.i_u0_ratio.rate) - std::log(i_d0);
  }
  double mu(const Eigen::VectorXd& v) const { return mvnormal_log_pdf(v, cfg_.mu.mean, cfg_.mu.cov); }
  double sigma_beta2(double v) const { return inv_gamma_log_pdf(v, cfg_.sigma_beta2.shape, cfg_.sigma_beta2.rate); }
  double rho(double v) const { return beta_log_pdf(v, cfg_.rho.a, cfg_.rho.b); }
  double alpha_inv(double v) const { return alpha_inv_.log_pdf(v); }
  double eta(const Eigen::VectorXd& v) const { return mvnormal_log_pdf(v, cfg_.eta.mean, cfg_.eta.cov); }
  double sigma_gamma2(double v) const {
    return inv_gamma_log_pdf(v, cfg_.sigma_gamma2.shape, cfg_.sigma_gamma2.rate);
  }

  const TruncatedGamma& alpha_inv_law() const { return alpha_inv_; }

 private:
  PriorConfig cfg_;
  TruncatedGamma alpha_inv_;
};

/// Full log prior density of a state; -inf outside the support.
///
/// `x` holds the GP design rows x_t for t = 0..T.
inline double log_prior(const ParameterState& theta, const PriorDensity& prior, const Eigen::MatrixXd& x,
                        double i_d0) {
  if (!(theta.rho > 0.0 && theta.rho < 1.0)) return neg_inf;
  if (!(theta.alpha_inv >= 1.0)) return neg_inf;
  if (!(theta.r0 > 0.0) || !(theta.sigma_beta2 > 0.0) || !(theta.sigma_gamma2 > 0.0)) return neg_inf;
  double lp = prior.i_u0(theta.r0, i_d0);
  lp += prior.mu(theta.mu);
  lp += prior.sigma_beta2(theta.sigma_beta2);
  lp += prior.rho(theta.rho);
  lp += prior.alpha_inv(theta.alpha_inv);
  lp += prior.eta(theta.eta);
  lp += prior.sigma_gamma2(theta.sigma_gamma2);
  lp += gp_log_density(theta.beta_tilde, GpSpec{x, theta.mu, theta.sigma_beta2, theta.rho});
  return lp;
}

}  // namespace sirgp

#endif  // SIRGP_PRIORS_HPP
