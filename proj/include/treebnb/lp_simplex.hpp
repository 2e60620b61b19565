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

// Bounded-variable primal simplex over a dense tableau.
//
//   min c'x  s.t.  Ax <= b,  l <= x <= u
//
// Every row gets a slack s_i >= 0 (Ax + s = b). Rows whose slack would start
// negative get an artificial column instead, and Phase 1 drives the sum of
// artificials to zero. Nonbasic variables sit at a finite bound, or at zero
// when free. Dantzig pricing is used until a run of degenerate pivots is seen,
// after which Bland's rule takes over for the rest of the phase.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "treebnb/common.hpp"

namespace treebnb {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Compressed sparse row matrix. Entries within a row are sorted by column.
struct SparseMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<int> row_start{0};
  std::vector<int> col_index;
  std::vector<double> values;

  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : n_rows(rows), n_cols(cols), row_start(rows + 1, 0) {}

  /// Duplicate (row, col) entries are summed; exact zeros are dropped.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
        throw DimensionMismatch("triplet (" + std::to_string(t.row) + ", " +
                                std::to_string(t.col) + ") outside " + std::to_string(rows) +
                                "x" + std::to_string(cols) + " matrix");
      }
      if (!std::isfinite(t.value)) throw InvalidConfig("non-finite matrix coefficient");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    SparseMatrix m(rows, cols);
    for (std::size_t k = 0; k < entries.size();) {
      const Triplet& t = entries[k];
      double v = 0.0;
      std::size_t e = k;
      for (; e < entries.size() && entries[e].row == t.row && entries[e].col == t.col; ++e) {
        v += entries[e].value;
      }
      if (v != 0.0) {
        m.col_index.push_back(t.col);
        m.values.push_back(v);
        ++m.row_start[t.row + 1];
      }
      k = e;
    }
    for (int i = 0; i < rows; ++i) m.row_start[i + 1] += m.row_start[i];
    return m;
  }

  [[nodiscard]] std::size_t nnz() const { return values.size(); }

  [[nodiscard]] std::span<const int> row_cols(int i) const {
    return {col_index.data() + row_start[i], col_index.data() + row_start[i + 1]};
  }
  [[nodiscard]] std::span<const double> row_vals(int i) const {
    return {values.data() + row_start[i], values.data() + row_start[i + 1]};
  }

  [[nodiscard]] std::vector<Triplet> triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (int i = 0; i < n_rows; ++i) {
      for (int k = row_start[i]; k < row_start[i + 1]; ++k) {
        out.push_back({i, col_index[k], values[k]});
      }
    }
    return out;
  }

  /// Row activities A x.
  [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const {
    std::vector<double> ax(n_rows, 0.0);
    for (int i = 0; i < n_rows; ++i) {
      double s = 0.0;
      for (int k = row_start[i]; k < row_start[i + 1]; ++k) s += values[k] * x[col_index[k]];
      ax[i] = s;
    }
    return ax;
  }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;
};

struct LpProblem {
  std::vector<double> obj;
  SparseMatrix rows;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] int n_vars() const { return static_cast<int>(obj.size()); }
  [[nodiscard]] int n_rows() const { return rows.n_rows; }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;  // empty unless Optimal
  double obj_value = kInf;
  int iterations = 0;

  [[nodiscard]] bool optimal() const { return status == LpStatus::Optimal; }
};

struct SimplexOptions {
  double feas_tol = kFeasTol;
  double pivot_tol = kPivotTol;
  double dual_tol = 1e-9;
  /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
  int degenerate_threshold = 50;
};

namespace detail {

class DenseSimplex {
 public:
  DenseSimplex(const SparseMatrix& a, std::span<const double> c, std::span<const double> b,
               std::span<const double> l, std::span<const double> u, const SimplexOptions& opt)
      : a_(a), c_(c), b_(b), opt_(opt), m_(a.n_rows), n_(a.n_cols) {
    init(l, u);
  }

  LpResult run() {
    LpResult res;
    if (trivially_infeasible_) return res;

    if (n_art_ > 0) {
      std::vector<double> phase1(ncols_, 0.0);
      for (int j = n_ + m_; j < ncols_; ++j) phase1[j] = 1.0;
      const auto st = iterate(phase1, /*phase_one=*/true);
      if (st == LpStatus::Unbounded) {
        throw NumericalBreakdown("phase 1 found an unbounded ray");
      }
      double infeas = 0.0;
      for (int j = n_ + m_; j < ncols_; ++j) infeas += value_of(j);
      if (infeas > opt_.feas_tol) {
        res.iterations = iterations_;
        return res;
      }
      for (int j = n_ + m_; j < ncols_; ++j) {
        lo_[j] = 0.0;
        up_[j] = 0.0;
        if (basic_row_[j] < 0) val_[j] = 0.0;
      }
    }

    std::vector<double> phase2(ncols_, 0.0);
    std::copy(c_.begin(), c_.end(), phase2.begin());
    const auto st = iterate(phase2, /*phase_one=*/false);
    res.iterations = iterations_;
    if (st == LpStatus::Unbounded) {
      res.status = LpStatus::Unbounded;
      return res;
    }

    res.status = LpStatus::Optimal;
    res.x.resize(n_);
    for (int j = 0; j < n_; ++j) res.x[j] = value_of(j);
    double z = 0.0;
    for (int j = 0; j < n_; ++j) z += c_[j] * res.x[j];
    res.obj_value = z;
    verify(res.x);
    return res;
  }

 private:
  const SparseMatrix& a_;
  std::span<const double> c_;
  std::span<const double> b_;
  SimplexOptions opt_;
  int m_;
  int n_;
  int n_art_ = 0;
  int ncols_ = 0;
  bool trivially_infeasible_ = false;
  int iterations_ = 0;

  std::vector<double> tab_;      // m_ x ncols_, row-major: B^{-1} [A I -E]
  std::vector<double> beta_;     // basic variable values
  std::vector<int> basis_;       // column basic in each row
  std::vector<int> basic_row_;   // row of each basic column, -1 if nonbasic
  std::vector<double> lo_, up_;  // column bounds
  std::vector<double> val_;      // nonbasic column values
  std::vector<double> d_;        // reduced costs
  std::vector<int> nz_;          // nonzero columns of the pivot row

  double& t(int i, int j) { return tab_[static_cast<std::size_t>(i) * ncols_ + j]; }

  [[nodiscard]] double value_of(int j) const {
    return basic_row_[j] >= 0 ? beta_[basic_row_[j]] : val_[j];
  }

  void init(std::span<const double> l, std::span<const double> u) {
    for (int j = 0; j < n_; ++j) {
      if (l[j] > u[j]) trivially_infeasible_ = true;
    }
    if (trivially_infeasible_) return;

    std::vector<double> x0(n_);
    for (int j = 0; j < n_; ++j) {
      x0[j] = std::isfinite(l[j]) ? l[j] : (std::isfinite(u[j]) ? u[j] : 0.0);
    }
    const std::vector<double> ax = a_.multiply(x0);
    std::vector<double> resid(m_);
    for (int i = 0; i < m_; ++i) resid[i] = b_[i] - ax[i];
    crash(l, u, x0, resid);
    for (int i = 0; i < m_; ++i) {
      if (resid[i] < 0.0) ++n_art_;
    }

    ncols_ = n_ + m_ + n_art_;
    tab_.assign(static_cast<std::size_t>(m_) * ncols_, 0.0);
    beta_.assign(m_, 0.0);
    basis_.assign(m_, -1);
    basic_row_.assign(ncols_, -1);
    lo_.assign(ncols_, 0.0);
    up_.assign(ncols_, kInf);
    val_.assign(ncols_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = l[j];
      up_[j] = u[j];
      val_[j] = x0[j];
    }

    int art = n_ + m_;
    for (int i = 0; i < m_; ++i) {
      // Basis matrix is diagonal with +1 (slack) or -1 (artificial); rows with
      // an artificial basic column are negated so the tableau keeps B^{-1}A.
      const bool needs_art = resid[i] < 0.0;
      const double sign = needs_art ? -1.0 : 1.0;
      for (int k = a_.row_start[i]; k < a_.row_start[i + 1]; ++k) {
        t(i, a_.col_index[k]) = sign * a_.values[k];
      }
      t(i, n_ + i) = sign;
      if (needs_art) {
        t(i, art) = 1.0;
        basis_[i] = art;
        basic_row_[art] = i;
        beta_[i] = -resid[i];
        ++art;
      } else {
        basis_[i] = n_ + i;
        basic_row_[n_ + i] = i;
        beta_[i] = resid[i];
      }
    }
  }

  // Greedy crash: in column order, moves a boxed column to its other bound
  // whenever that strictly lowers the total row infeasibility.
  void crash(std::span<const double> l, std::span<const double> u, std::vector<double>& x0,
             std::vector<double>& resid) const {
    bool any_negative = false;
    for (double r : resid) any_negative = any_negative || r < 0.0;
    if (!any_negative) return;
    std::vector<int> col_start(n_ + 1, 0), col_row(a_.nnz());
    std::vector<double> col_val(a_.nnz());
    for (int j : a_.col_index) ++col_start[j + 1];
    for (int j = 0; j < n_; ++j) col_start[j + 1] += col_start[j];
    std::vector<int> fill(col_start.begin(), col_start.end() - 1);
    for (int i = 0; i < m_; ++i) {
      for (int k = a_.row_start[i]; k < a_.row_start[i + 1]; ++k) {
        const int pos = fill[a_.col_index[k]]++;
        col_row[pos] = i;
        col_val[pos] = a_.values[k];
      }
    }
    for (int j = 0; j < n_; ++j) {
      if (!std::isfinite(l[j]) || !std::isfinite(u[j]) || l[j] == u[j]) continue;
      const double move = (x0[j] == l[j] ? u[j] : l[j]) - x0[j];
      double change = 0.0;
      for (int k = col_start[j]; k < col_start[j + 1]; ++k) {
        const double r = resid[col_row[k]];
        const double nr = r - col_val[k] * move;
        change += std::max(0.0, -nr) - std::max(0.0, -r);
      }
      if (change < -1e-12) {
        x0[j] += move;
        for (int k = col_start[j]; k < col_start[j + 1]; ++k) {
          resid[col_row[k]] -= col_val[k] * move;
        }
      }
    }
  }

  void compute_reduced_costs(const std::vector<double>& cost) {
    d_ = cost;
    for (int i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &tab_[static_cast<std::size_t>(i) * ncols_];
      for (int j = 0; j < ncols_; ++j) d_[j] -= cb * row[j];
    }
    for (int i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
  }

  // Returns the entering column and its direction (+1 increase, -1 decrease).
  std::pair<int, int> price(double dual_tol, bool bland) const {
    int best = -1;
    int dir = 0;
    double best_mag = 0.0;
    for (int j = 0; j < ncols_; ++j) {
      if (basic_row_[j] >= 0 || lo_[j] == up_[j]) continue;
      const double dj = d_[j];
      int jdir = 0;
      const bool free_var = !std::isfinite(lo_[j]) && !std::isfinite(up_[j]);
      if (dj < -dual_tol && (val_[j] == lo_[j] || free_var)) jdir = 1;
      else if (dj > dual_tol && (val_[j] == up_[j] || free_var)) jdir = -1;
      if (jdir == 0) continue;
      if (bland) return {j, jdir};
      if (std::abs(dj) > best_mag) {
        best_mag = std::abs(dj);
        best = j;
        dir = jdir;
      }
    }
    return {best, dir};
  }

  LpStatus iterate(const std::vector<double>& cost, bool phase_one) {
    compute_reduced_costs(cost);
    double cmax = 1.0;
    for (double v : cost) cmax = std::max(cmax, std::abs(v));
    const double dual_tol = opt_.dual_tol * cmax;
    const int max_iter = 50 * (m_ + ncols_) + 1000;
    bool bland = false;
    int degenerate_run = 0;
    int breakdown_retries = 0;

    for (int it = 0;; ++it) {
      if (it > max_iter) throw NumericalBreakdown("simplex iteration limit exceeded");
      const auto [q, dir] = price(dual_tol, bland);
      if (q < 0) return LpStatus::Optimal;
      ++iterations_;

      // Ratio test.
      double step = up_[q] - lo_[q];  // bound flip distance (inf if unbounded)
      int leave_row = -1;
      double leave_alpha = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double alpha = dir * t(i, q);
        if (std::abs(alpha) <= opt_.pivot_tol) continue;
        const int bj = basis_[i];
        double lim;
        if (alpha > 0.0) {
          if (!std::isfinite(lo_[bj])) continue;
          lim = (beta_[i] - lo_[bj]) / alpha;
        } else {
          if (!std::isfinite(up_[bj])) continue;
          lim = (up_[bj] - beta_[i]) / -alpha;
        }
        lim = std::max(lim, 0.0);
        bool take = false;
        if (lim < step - 1e-12) {
          take = true;
        } else if (lim <= step + 1e-12 && leave_row >= 0) {
          take = bland ? bj < basis_[leave_row] : std::abs(alpha) > std::abs(leave_alpha);
        }
        if (take) {
          step = lim;
          leave_row = i;
          leave_alpha = alpha;
        }
      }

      if (!std::isfinite(step)) {
        if (phase_one || !bland) {
          // A ray in Phase 1 is impossible in exact arithmetic; retry with Bland.
          if (++breakdown_retries > 2) {
            if (phase_one) throw NumericalBreakdown("phase 1 ray persists");
            return LpStatus::Unbounded;
          }
          bland = true;
          continue;
        }
        return LpStatus::Unbounded;
      }

      degenerate_run = step <= 1e-12 ? degenerate_run + 1 : 0;
      if (degenerate_run > opt_.degenerate_threshold) bland = true;

      const double delta = dir * step;
      for (int i = 0; i < m_; ++i) {
        const double tiq = t(i, q);
        if (tiq != 0.0) beta_[i] -= tiq * delta;
      }

      if (leave_row < 0) {
        val_[q] = dir > 0 ? up_[q] : lo_[q];
        continue;
      }

      const int leaving = basis_[leave_row];
      const double entering_value = val_[q] + delta;
      val_[leaving] = leave_alpha > 0.0 ? lo_[leaving] : up_[leaving];
      basic_row_[leaving] = -1;
      if (phase_one && leaving >= n_ + m_) {
        up_[leaving] = 0.0;  // artificials never re-enter
      }
      pivot(leave_row, q);
      basis_[leave_row] = q;
      basic_row_[q] = leave_row;
      beta_[leave_row] = entering_value;
    }
  }

  void pivot(int r, int q) {
    double* prow = &tab_[static_cast<std::size_t>(r) * ncols_];
    const double inv = 1.0 / prow[q];
    nz_.clear();
    for (int j = 0; j < ncols_; ++j) {
      if (prow[j] != 0.0) {
        prow[j] *= inv;
        nz_.push_back(j);
      }
    }
    prow[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &tab_[static_cast<std::size_t>(i) * ncols_];
      const double f = row[q];
      if (f == 0.0) continue;
      for (int j : nz_) row[j] -= f * prow[j];
      row[q] = 0.0;
    }
    const double dq = d_[q];
    if (dq != 0.0) {
      for (int j : nz_) d_[j] -= dq * prow[j];
      d_[q] = 0.0;
    }
  }

  void verify(std::span<const double> x) const {
    double scale = 1.0;
    for (int i = 0; i < m_; ++i) scale = std::max(scale, std::abs(b_[i]));
    const double tol = opt_.feas_tol * scale;
    const auto ax = a_.multiply(x);
    for (int i = 0; i < m_; ++i) {
      if (ax[i] > b_[i] + tol) {
        throw NumericalBreakdown("row " + std::to_string(i) + " violated by " +
                                 std::to_string(ax[i] - b_[i]) + " at optimum");
      }
    }
  }
};

}  // namespace detail

/// Solves min c'x s.t. Ax <= b, l <= x <= u. Throws NumericalBreakdown when
/// the tableau degrades beyond recovery.
inline LpResult solve_lp(const SparseMatrix& a, std::span<const double> obj,
                         std::span<const double> rhs, std::span<const double> lower,
                         std::span<const double> upper, const SimplexOptions& options = {}) {
  const auto n = static_cast<std::size_t>(a.n_cols);
  const auto m = static_cast<std::size_t>(a.n_rows);
  if (obj.size() != n || lower.size() != n || upper.size() != n || rhs.size() != m) {
    throw DimensionMismatch("LP vectors do not match matrix dimensions");
  }
  detail::DenseSimplex simplex(a, obj, rhs, lower, upper, options);
  return simplex.run();
}

inline LpResult solve_lp(const LpProblem& p, const SimplexOptions& options = {}) {
  return solve_lp(p.rows, p.obj, p.rhs, p.lower, p.upper, options);
}

}  // namespace treebnb
