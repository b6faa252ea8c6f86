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

#ifndef SIRGP_ERROR_HPP
#define SIRGP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sirgp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A compartment went negative during propagation.
class InfeasibleTrajectory : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (ladder, sampler lengths, config file keys, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class NonContiguousDates : public Error {
 public:
  using Error::Error;
};

/// Scenario root-finder did not reach the requested residual.
class SolveFailure : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// A chain segment has zero variance, so a z-score is undefined.
class DegenerateChain : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (CSV, JSON dataset, draws table).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace sirgp

#endif  // SIRGP_ERROR_HPP
