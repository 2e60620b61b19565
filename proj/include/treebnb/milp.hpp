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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treebnb/common.hpp"
#include "treebnb/lp_simplex.hpp"

namespace treebnb {

/// min c'x s.t. Ax <= b, l <= x <= u, x_j integer for j in int_set.
struct MilpInstance {
  std::string name;
  std::vector<double> obj;
  SparseMatrix rows;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> int_set;

  [[nodiscard]] int n_vars() const { return static_cast<int>(obj.size()); }
  [[nodiscard]] int n_rows() const { return rows.n_rows; }

  /// Throws InvalidConfig describing the first violated structural rule.
  void validate() const {
    const auto n = obj.size();
    if (rows.n_cols != n_vars() || lower.size() != n || upper.size() != n ||
        rhs.size() != static_cast<std::size_t>(rows.n_rows)) {
      throw InvalidConfig(name + ": dimension mismatch between fields");
    }
    for (std::size_t k = 0; k < int_set.size(); ++k) {
      const int j = int_set[k];
      if (j < 0 || j >= n_vars()) throw InvalidConfig(name + ": integer index out of range");
      if (k > 0 && int_set[k - 1] >= j) {
        throw InvalidConfig(name + ": integer indices must be strictly increasing");
      }
      if ((std::isfinite(lower[j]) && lower[j] != std::floor(lower[j])) ||
          (std::isfinite(upper[j]) && upper[j] != std::floor(upper[j]))) {
        throw InvalidConfig(name + ": integer variable with fractional bound");
      }
    }
    for (double v : obj) {
      if (!std::isfinite(v)) throw InvalidConfig(name + ": non-finite objective coefficient");
    }
    for (double v : rhs) {
      if (!std::isfinite(v)) throw InvalidConfig(name + ": non-finite right-hand side");
    }
  }

  [[nodiscard]] bool is_integer(int j) const {
    return std::binary_search(int_set.begin(), int_set.end(), j);
  }

  friend bool operator==(const MilpInstance&, const MilpInstance&) = default;
};

struct MilpSolution {
  std::vector<double> x;
  double obj_value = kInf;
  bool is_feasible = false;
};

inline LpProblem lp_relaxation(const MilpInstance& inst) {
  return LpProblem{inst.obj, inst.rows, inst.rhs, inst.lower, inst.upper};
}

struct FeasibilityCheck {
  bool feasible = false;
  double max_violation = 0.0;
};

/// Row, bound and integrality residuals of `x`. Row residuals use kFeasTol,
/// integrality uses kIntegralityTol.
inline FeasibilityCheck check_feasible(const MilpInstance& inst, std::span<const double> x) {
  if (x.size() != inst.obj.size()) {
    throw DimensionMismatch("point has " + std::to_string(x.size()) + " entries, instance has " +
                            std::to_string(inst.n_vars()) + " variables");
  }
  double row_viol = 0.0;
  const auto ax = inst.rows.multiply(x);
  for (int i = 0; i < inst.n_rows(); ++i) row_viol = std::max(row_viol, ax[i] - inst.rhs[i]);
  for (int j = 0; j < inst.n_vars(); ++j) {
    row_viol = std::max(row_viol, inst.lower[j] - x[j]);
    row_viol = std::max(row_viol, x[j] - inst.upper[j]);
  }
  double int_viol = 0.0;
  for (int j : inst.int_set) int_viol = std::max(int_viol, integrality_violation(x[j]));
  return {row_viol <= kFeasTol && int_viol <= kIntegralityTol, std::max(row_viol, int_viol)};
}

inline double objective_value(const MilpInstance& inst, std::span<const double> x) {
  double z = 0.0;
  for (int j = 0; j < inst.n_vars(); ++j) z += inst.obj[j] * x[j];
  return z;
}

enum class BruteForceStatus { Solved, NoSolution, TooLarge };

struct BruteForceResult {
  BruteForceStatus status = BruteForceStatus::NoSolution;
  MilpSolution solution;
  std::uint64_t assignments = 0;
};

/// Enumerates every integer assignment (no pruning) and solves the continuous
/// remainder of each with the simplex. Returns TooLarge when the product of
/// integer domain sizes exceeds `enum_cap`.
inline BruteForceResult brute_force_solve(const MilpInstance& inst, std::uint64_t enum_cap) {
  BruteForceResult out;
  const auto& ints = inst.int_set;
  std::vector<long long> lo(ints.size()), hi(ints.size());
  double total = 1.0;
  for (std::size_t k = 0; k < ints.size(); ++k) {
    const int j = ints[k];
    if (!std::isfinite(inst.lower[j]) || !std::isfinite(inst.upper[j])) {
      throw InvalidConfig("brute force needs finitely bounded integer variables");
    }
    lo[k] = static_cast<long long>(std::ceil(inst.lower[j] - kIntegralityTol));
    hi[k] = static_cast<long long>(std::floor(inst.upper[j] + kIntegralityTol));
    if (hi[k] < lo[k]) return out;
    total *= static_cast<double>(hi[k] - lo[k] + 1);
  }
  if (total > static_cast<double>(enum_cap)) {
    out.status = BruteForceStatus::TooLarge;
    return out;
  }

  const bool pure_integer = ints.size() == inst.obj.size();
  std::vector<double> x(inst.n_vars(), 0.0);
  std::vector<double> l = inst.lower, u = inst.upper;
  std::vector<long long> cur = lo;
  for (;;) {
    ++out.assignments;
    for (std::size_t k = 0; k < ints.size(); ++k) {
      l[ints[k]] = u[ints[k]] = static_cast<double>(cur[k]);
    }
    std::optional<std::vector<double>> point;
    if (pure_integer) {
      for (std::size_t k = 0; k < ints.size(); ++k) x[ints[k]] = static_cast<double>(cur[k]);
      const auto ax = inst.rows.multiply(x);
      bool ok = true;
      for (int i = 0; i < inst.n_rows() && ok; ++i) ok = ax[i] <= inst.rhs[i] + kFeasTol;
      if (ok) point = x;
    } else {
      auto lp = solve_lp(inst.rows, inst.obj, inst.rhs, l, u);
      if (lp.status == LpStatus::Unbounded) {
        throw InvalidConfig("brute force: continuous remainder is unbounded");
      }
      if (lp.optimal()) point = std::move(lp.x);
    }
    if (point) {
      const double z = objective_value(inst, *point);
      if (!out.solution.is_feasible || z < out.solution.obj_value) {
        out.solution = {*point, z, true};
        out.status = BruteForceStatus::Solved;
      }
    }
    std::size_t k = 0;
    for (; k < cur.size(); ++k) {
      if (cur[k] < hi[k]) {
        ++cur[k];
        break;
      }
      cur[k] = lo[k];
    }
    if (k == cur.size()) break;
  }
  return out;
}

/// min x s.t. x >= 0.6, x integer in [0, 10]: the smallest instance whose
/// child upper bounds depend on node processing order.
inline MilpInstance counterexample_instance() {
  MilpInstance inst;
  inst.name = "counterexample";
  inst.obj = {1.0};
  inst.rows = SparseMatrix::from_triplets(1, 1, {{0, 0, -1.0}});
  inst.rhs = {-0.6};
  inst.lower = {0.0};
  inst.upper = {10.0};
  inst.int_set = {0};
  return inst;
}

}  // namespace treebnb
