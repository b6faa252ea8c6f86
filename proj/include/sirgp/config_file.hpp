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

#ifndef SIRGP_CONFIG_FILE_HPP
#define SIRGP_CONFIG_FILE_HPP

// Plain-text `key = value` configuration. Blank lines and lines starting
// with '#' are ignored; trailing `# comments` are stripped.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sirgp/error.hpp"

namespace sirgp {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + std::string(what) + ": '" + t + "'");
  }
}

inline long long parse_integer(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw ConfigError("invalid integer for " + std::string(what) + ": '" + t + "'");
  return v;
}

/// Comma-separated list of numbers.
inline Eigen::VectorXd parse_vector(std::string_view s, std::string_view what) {
  const auto parts = split(s, ',');
  Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_double(parts[i], what);
  return v;
}

/// Rows separated by ';', entries by ','.
inline Eigen::MatrixXd parse_matrix(std::string_view s, std::string_view what) {
  const auto rows = split(s, ';');
  std::vector<Eigen::VectorXd> parsed;
  for (const auto& r : rows) parsed.push_back(parse_vector(r, what));
  const auto n = static_cast<Eigen::Index>(parsed.size());
  Eigen::MatrixXd m(n, parsed.front().size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (parsed[static_cast<std::size_t>(i)].size() != m.cols())
      throw ConfigError("ragged matrix for " + std::string(what));
    m.row(i) = parsed[static_cast<std::size_t>(i)].transpose();
  }
  return m;
}

inline std::string format_vector(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  return os.str();
}

inline std::string format_matrix(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) os << "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
  }
  return os.str();
}

/// Ordered key/value store that remembers which keys were consumed, so
/// callers can reject misspelled keys.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(body.substr(0, eq));
      if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      cfg.values_[key] = trim(body.substr(eq + 1));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  const std::string* find(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  std::string get_string(const std::string& key, std::string fallback) const {
    const auto* v = find(key);
    return v ? *v : fallback;
  }
  double get_double(const std::string& key, double fallback) const {
    const auto* v = find(key);
    return v ? parse_double(*v, key) : fallback;
  }
  long long get_integer(const std::string& key, long long fallback) const {
    const auto* v = find(key);
    return v ? parse_integer(*v, key) : fallback;
  }

  /// Keys present in the file that no reader asked for.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace sirgp

#endif  // SIRGP_CONFIG_FILE_HPP
