// Copyright 2026 The treebnb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace treebnb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Shared solver tolerances.
inline constexpr double kFeasTol = 1e-6;
inline constexpr double kPivotTol = 1e-9;
inline constexpr double kIntegralityTol = 1e-6;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public ParseError {
 public:
  using ParseError::ParseError;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The simplex could not make numerically safe progress.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

class MalformedTree : public Error {
 public:
  using Error::Error;
};

class DepthCapExceeded : public Error {
 public:
  using Error::Error;
};

/// Distance of `v` to the nearest integer.
inline double integrality_violation(double v) { return std::abs(v - std::round(v)); }

inline bool is_integral(double v, double tol = kIntegralityTol) {
  return integrality_violation(v) <= tol;
}

/// SplitMix64 step; used to derive independent seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace treebnb
