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

#ifndef SIRGP_DATA_IO_HPP
#define SIRGP_DATA_IO_HPP

/** @file
 * Cumulative confirmed-case series: CSV ingestion, day-0 alignment and the
 * canonical dataset file.
 *
 * Two CSV layouts are detected from the header:
 *   wide  one row per region, one column per date (JHU CSSE time series);
 *         every row with a text cell equal to the region name is summed
 *   long  columns `date` and `cumulative` (alias `confirmed`, `cases`)
 */

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sirgp/config_file.hpp"
#include "sirgp/error.hpp"
#include "sirgp/model.hpp"

namespace sirgp {

// ---------------------------------------------------------------------------
// Dates

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

/// Accepts YYYY-MM-DD and the US style M/D/YY or M/D/YYYY.
inline std::optional<Date> try_parse_date(std::string_view s) {
  const std::string t = trim(s);
  auto num = [](std::string_view p, int& out) {
    if (p.empty()) return false;
    const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), out);
    return ec == std::errc{} && ptr == p.data() + p.size();
  };
  int y = 0, m = 0, d = 0;
  if (t.find('-') != std::string::npos) {
    const auto parts = split(t, '-');
    if (parts.size() != 3 || parts[0].size() != 4 || !num(parts[0], y) || !num(parts[1], m) || !num(parts[2], d))
      return std::nullopt;
  } else if (t.find('/') != std::string::npos) {
    const auto parts = split(t, '/');
    if (parts.size() != 3 || !num(parts[0], m) || !num(parts[1], d) || !num(parts[2], y)) return std::nullopt;
    if (parts[2].size() == 2) y += 2000;
  } else {
    return std::nullopt;
  }
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

inline Date parse_date(std::string_view s) {
  const auto d = try_parse_date(s);
  if (!d) throw ParseError("invalid date: '" + std::string(s) + "'");
  return *d;
}

inline Date add_days(const Date& d, long long days) {
  return Date{std::chrono::sys_days{d} + std::chrono::days{days}};
}

// ---------------------------------------------------------------------------
// Raw series and ingestion

struct RawCaseSeries {
  std::vector<Date> dates;
  std::vector<double> cumulative;
  std::string region;
  double population = 0.0;
};

struct IngestOptions {
  double threshold = 100.0;   ///< day 0 is the first date with cumulative >= threshold
  double zero_floor = 0.5;    ///< replaces zero daily counts
  std::size_t max_days = 0;   ///< keep at most this many days (0 = all)
};

/// Removes downward revisions: each day's increment is clamped at zero.
inline std::vector<double> clean_cumulative(const std::vector<double>& c) {
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = i == 0 ? c[0] : out[i - 1] + std::max(0.0, c[i] - c[i - 1]);
  return out;
}

/// Daily increments c_{t+1} - c_t of a non-decreasing series.
inline std::vector<double> daily_counts(const std::vector<double>& cleaned) {
  std::vector<double> d;
  for (std::size_t i = 0; i + 1 < cleaned.size(); ++i) d.push_back(cleaned[i + 1] - cleaned[i]);
  return d;
}

/// Inverse of daily_counts given the starting level.
inline std::vector<double> cumulate(double start, const std::vector<double>& daily) {
  std::vector<double> c{start};
  for (double b : daily) c.push_back(c.back() + b);
  return c;
}

inline void check_contiguous(const std::vector<Date>& dates) {
  for (std::size_t i = 1; i < dates.size(); ++i)
    if (std::chrono::sys_days{dates[i]} - std::chrono::sys_days{dates[i - 1]} != std::chrono::days{1})
      throw NonContiguousDates("dates are not consecutive days at " + format_date(dates[i]));
}

inline Observations ingest_cases(const RawCaseSeries& raw, const IngestOptions& opt = {}) {
  if (raw.dates.size() != raw.cumulative.size()) throw ParseError("ingest: dates and counts differ in length");
  check_contiguous(raw.dates);
  const auto it = std::find_if(raw.cumulative.begin(), raw.cumulative.end(),
                               [&](double c) { return c >= opt.threshold; });
  if (it == raw.cumulative.end())
    throw InsufficientData("cumulative count never reaches " + std::to_string(opt.threshold));
  const auto day0 = static_cast<std::size_t>(it - raw.cumulative.begin());
  std::vector<double> window(raw.cumulative.begin() + static_cast<std::ptrdiff_t>(day0), raw.cumulative.end());
  if (opt.max_days > 0 && window.size() > opt.max_days + 1) window.resize(opt.max_days + 1);
  if (window.size() < 2) throw InsufficientData("no daily counts after day 0");
  const auto cleaned = clean_cumulative(window);

  Observations obs;
  obs.B = daily_counts(cleaned);
  for (double& b : obs.B)
    if (b == 0.0) b = opt.zero_floor;
  obs.I_D0 = cleaned.front();
  obs.population = Population(raw.population);
  obs.day0_date = raw.dates[day0];
  obs.region = raw.region;
  return obs;
}

// ---------------------------------------------------------------------------
// CSV

/// Splits one CSV record; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Region population from the bundled table (2019 U.S. Census Bureau
/// estimates); accepts state names and postal codes, case-insensitive.
inline std::optional<double> census_population(std::string_view region) {
  static const std::map<std::string, double> table = {
      {"washington", 7614893},  {"wa", 7614893},  {"new york", 19453561}, {"ny", 19453561},
      {"california", 39512223}, {"ca", 39512223}, {"florida", 21477737},  {"fl", 21477737},
      {"texas", 28995881},      {"tx", 28995881}, {"illinois", 12671821}, {"il", 12671821},
  };
  const auto it = table.find(lower(trim(region)));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

/// Reads either CSV layout. `region` selects rows in the wide layout and
/// labels the series; population is left at 0 for the caller to fill.
inline RawCaseSeries read_case_csv(std::istream& in, std::string_view region = {}) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("case CSV is empty");
  const auto header = split_csv_line(line);
  RawCaseSeries raw;
  raw.region = std::string(region);

  std::vector<std::size_t> date_cols;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (try_parse_date(header[i])) date_cols.push_back(i);

  auto number = [](const std::string& s, std::size_t row) {
    try {
      return parse_double(s, "cumulative count");
    } catch (const ConfigError&) {
      throw ParseError("row " + std::to_string(row) + ": invalid count '" + s + "'");
    }
  };

  if (!date_cols.empty()) {
    for (std::size_t i = 0; i < date_cols.size(); ++i) raw.dates.push_back(*try_parse_date(header[date_cols[i]]));
    raw.cumulative.assign(date_cols.size(), 0.0);
    const std::string want = lower(std::string(region));
    std::size_t matched = 0;
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (trim(line).empty()) continue;
      const auto cells = split_csv_line(line);
      bool hit = want.empty();
      for (std::size_t i = 0; i < cells.size() && !hit; ++i) {
        if (std::find(date_cols.begin(), date_cols.end(), i) != date_cols.end()) continue;
        hit = lower(cells[i]) == want;
      }
      if (!hit) continue;
      ++matched;
      for (std::size_t i = 0; i < date_cols.size(); ++i) {
        if (date_cols[i] >= cells.size()) throw ParseError("row " + std::to_string(row) + ": missing date columns");
        raw.cumulative[i] += number(cells[date_cols[i]], row);
      }
    }
    if (matched == 0) throw InsufficientData("no rows match region '" + std::string(region) + "'");
    return raw;
  }

  std::optional<std::size_t> date_col, count_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lower(header[i]);
    if (h == "date") date_col = i;
    if (h == "cumulative" || h == "confirmed" || h == "cases") count_col = i;
  }
  if (!date_col || !count_col) throw ParseError("case CSV header has neither date columns nor date,cumulative");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() <= std::max(*date_col, *count_col))
      throw ParseError("row " + std::to_string(row) + ": too few columns");
    const auto d = try_parse_date(cells[*date_col]);
    if (!d) throw ParseError("row " + std::to_string(row) + ": invalid date '" + cells[*date_col] + "'");
    raw.dates.push_back(*d);
    raw.cumulative.push_back(number(cells[*count_col], row));
  }
  return raw;
}

inline RawCaseSeries load_case_csv(const std::string& path, std::string_view region = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case CSV: " + path);
  return read_case_csv(in, region);
}

// ---------------------------------------------------------------------------
// Canonical dataset file

inline nlohmann::json dataset_to_json(const Observations& obs) {
  return {{"region", obs.region},
          {"population", obs.population.size},
          {"I_D0", obs.I_D0},
          {"day0_date", format_date(obs.day0_date)},
          {"B", obs.B}};
}

inline Observations dataset_from_json(const nlohmann::json& j) {
  try {
    Observations obs;
    obs.region = j.value("region", std::string{});
    obs.population = Population(j.at("population").get<double>());
    obs.I_D0 = j.at("I_D0").get<double>();
    obs.day0_date = parse_date(j.at("day0_date").get<std::string>());
    obs.B = j.at("B").get<std::vector<double>>();
    obs.validate();
    return obs;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(std::string("dataset: ") + e.what());
  }
}

inline void save_dataset(const std::string& path, const Observations& obs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset: " + path);
  out << dataset_to_json(obs).dump(2) << '\n';
}

inline Observations load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("dataset " + path + ": " + e.what());
  }
  return dataset_from_json(j);
}

}  // namespace sirgp

#endif  // SIRGP_DATA_IO_HPP
