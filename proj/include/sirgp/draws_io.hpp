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

#ifndef SIRGP_DRAWS_IO_HPP
#define SIRGP_DRAWS_IO_HPP

// Posterior draws as CSV (one row per draw) and a JSON summary.
//
// Columns: r0, i_u0, alpha_inv, mu_0.., sigma_beta2, rho, eta_0..,
// sigma_gamma2, log_likelihood, beta_tilde_0..beta_tilde_T. Values are
// written with 17 significant digits so a read-back is exact.

#include <cstddef>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sirgp/data_io.hpp"
#include "sirgp/error.hpp"
#include "sirgp/priors.hpp"
#include "sirgp/sampler.hpp"
#include "sirgp/stats.hpp"

namespace sirgp {

/// Names of the scalar summaries of a state, in CSV order.
inline std::vector<std::string> scalar_names(Eigen::Index mu_dim, Eigen::Index eta_dim) {
  std::vector<std::string> n{"r0", "i_u0", "alpha_inv"};
  for (Eigen::Index k = 0; k < mu_dim; ++k) n.push_back("mu_" + std::to_string(k));
  n.push_back("sigma_beta2");
  n.push_back("rho");
  for (Eigen::Index k = 0; k < eta_dim; ++k) n.push_back("eta_" + std::to_string(k));
  n.push_back("sigma_gamma2");
  return n;
}

inline std::vector<double> scalar_values(const ParameterState& th, double i_d0) {
  std::vector<double> v{th.r0, th.i_u0(i_d0), th.alpha_inv};
  for (Eigen::Index k = 0; k < th.mu.size(); ++k) v.push_back(th.mu(k));
  v.push_back(th.sigma_beta2);
  v.push_back(th.rho);
  for (Eigen::Index k = 0; k < th.eta.size(); ++k) v.push_back(th.eta(k));
  v.push_back(th.sigma_gamma2);
  return v;
}

/// Column-major traces of every scalar summary, keyed by name.
inline std::map<std::string, std::vector<double>> scalar_traces(const std::vector<ParameterState>& draws,
                                                                double i_d0) {
  std::map<std::string, std::vector<double>> out;
  if (draws.empty()) return out;
  const auto names = scalar_names(draws.front().mu.size(), draws.front().eta.size());
  for (const auto& th : draws) {
    const auto v = scalar_values(th, i_d0);
    for (std::size_t k = 0; k < names.size(); ++k) out[names[k]].push_back(v[k]);
  }
  return out;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_draws_csv(std::ostream& os, const std::vector<ParameterState>& draws,
                            const std::vector<double>& log_lik, double i_d0) {
  if (draws.empty()) throw DomainError("write_draws_csv: no draws");
  const auto& first = draws.front();
  auto names = scalar_names(first.mu.size(), first.eta.size());
  names.push_back("log_likelihood");
  for (Eigen::Index t = 0; t < first.beta_tilde.size(); ++t) names.push_back("beta_tilde_" + std::to_string(t));
  for (std::size_t k = 0; k < names.size(); ++k) os << (k ? "," : "") << names[k];
  os << '\n';
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto v = scalar_values(draws[i], i_d0);
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << format_double(v[k]);
    os << ',' << format_double(i < log_lik.size() ? log_lik[i] : std::nan(""));
    for (Eigen::Index t = 0; t < draws[i].beta_tilde.size(); ++t) os << ',' << format_double(draws[i].beta_tilde(t));
    os << '\n';
  }
}

struct DrawsTable {
  std::vector<ParameterState> draws;
  std::vector<double> log_likelihood;
};

inline DrawsTable read_draws_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("draws CSV is empty");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  auto count_prefix = [&](const std::string& p) {
    Eigen::Index n = 0;
    while (col.count(p + std::to_string(n))) ++n;
    return n;
  };
  for (const char* need : {"r0", "alpha_inv", "sigma_beta2", "rho", "sigma_gamma2"})
    if (!col.count(need)) throw ParseError(std::string("draws CSV lacks column ") + need);
  const Eigen::Index n_mu = count_prefix("mu_");
  const Eigen::Index n_eta = count_prefix("eta_");
  const Eigen::Index n_beta = count_prefix("beta_tilde_");
  if (n_mu == 0 || n_eta == 0 || n_beta == 0) throw ParseError("draws CSV lacks mu_, eta_ or beta_tilde_ columns");

  DrawsTable out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw ParseError("draws CSV row " + std::to_string(row) + ": wrong width");
    auto get = [&](const std::string& name) {
      try {
        return parse_double(cells[col.at(name)], name);
      } catch (const ConfigError& e) {
        throw ParseError("draws CSV row " + std::to_string(row) + ": " + e.what());
      }
    };
    ParameterState th;
    th.r0 = get("r0");
    th.alpha_inv = get("alpha_inv");
    th.sigma_beta2 = get("sigma_beta2");
    th.rho = get("rho");
    th.sigma_gamma2 = get("sigma_gamma2");
    th.mu.resize(n_mu);
    for (Eigen::Index k = 0; k < n_mu; ++k) th.mu(k) = get("mu_" + std::to_string(k));
    th.eta.resize(n_eta);
    for (Eigen::Index k = 0; k < n_eta; ++k) th.eta(k) = get("eta_" + std::to_string(k));
    th.beta_tilde.resize(n_beta);
    for (Eigen::Index t = 0; t < n_beta; ++t) th.beta_tilde(t) = get("beta_tilde_" + std::to_string(t));
    out.draws.push_back(std::move(th));
    out.log_likelihood.push_back(col.count("log_likelihood") ? get("log_likelihood") : std::nan(""));
  }
  return out;
}

inline void save_draws_csv(const std::string& path, const PosteriorDraws& d, double i_d0) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write draws: " + path);
  write_draws_csv(out, d.draws, d.log_likelihood, i_d0);
}

inline DrawsTable load_draws_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open draws file: " + path);
  return read_draws_csv(in);
}

/// Medians, 95% intervals and sampler diagnostics.
inline nlohmann::json summarize_draws(const PosteriorDraws& d, double i_d0) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, trace] : scalar_traces(d.draws, i_d0)) {
    const auto band = quantile_band(trace);
    params[name] = {{"median", band.median}, {"q025", band.lo}, {"q975", band.hi}};
  }
  nlohmann::json acc = nlohmann::json::array();
  for (std::size_t j = 0; j < d.acceptance.size(); ++j) {
    const auto& a = d.acceptance[j];
    acc.push_back({{"delta", j < d.ladder.size() ? d.ladder[j] : 1.0},
                   {"r0", a.r0},
                   {"beta_tilde", a.beta_tilde},
                   {"alpha_inv", a.alpha_inv},
                   {"rho", a.rho}});
  }
  return {{"draws", d.draws.size()},      {"n_iter", d.n_iter},       {"burn_in", d.burn_in},
          {"thin", d.thin},               {"seed", d.seed},           {"parameters", params},
          {"acceptance", acc},            {"swap_acceptance", d.swap_acceptance}};
}

}  // namespace sirgp

#endif  // SIRGP_DRAWS_IO_HPP
