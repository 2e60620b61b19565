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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treebnb/common.hpp"
#include "treebnb/lp_simplex.hpp"
#include "treebnb/milp.hpp"
#include "treebnb/policy.hpp"

namespace treebnb {

/// Branching disjunction x_j <= floor(v)  or  x_j >= ceil(v).
struct BranchAction {
  int var = -1;
  double split_value = 0.0;

  friend bool operator==(const BranchAction&, const BranchAction&) = default;
};

struct Candidate {
  int var = -1;
  double value = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct BoundChange {
  int var = -1;
  bool is_upper = false;  // true: x_var <= value, false: x_var >= value
  double value = 0.0;

  friend bool operator==(const BoundChange&, const BoundChange&) = default;
};

enum class NodeStatus { Open, Branched, LeafInfeasible, LeafPruned, LeafIntegerFeasible };

inline const char* to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::Open: return "open";
    case NodeStatus::Branched: return "branched";
    case NodeStatus::LeafInfeasible: return "infeasible";
    case NodeStatus::LeafPruned: return "pruned";
    case NodeStatus::LeafIntegerFeasible: return "integer";
  }
  return "?";
}

/// Features of every candidate at a branched node plus the index chosen.
struct DecisionRecord {
  std::vector<FeatureVector> features;
  int chosen = -1;
};

struct NodeState {
  int node_id = -1;
  int parent_id = -1;  // -1 for the root
  bool is_left_child = false;
  int depth = 0;
  std::vector<BoundChange> bound_changes;  // cumulative from the root
  double estimate = -kInf;                 // parent LP bound, used for node selection
  double local_lb = kInf;                  // LP objective, +inf when infeasible
  double gub_at_processing = kInf;
  double glb_at_processing = -kInf;
  std::vector<double> lp_solution;
  NodeStatus status = NodeStatus::Open;
  int left_child = -1;
  int right_child = -1;
  std::optional<BranchAction> action;
  std::optional<DecisionRecord> decision;

  [[nodiscard]] bool processed() const { return status != NodeStatus::Open; }
  [[nodiscard]] bool is_leaf() const { return status != NodeStatus::Branched; }
};

/// Local domain of `node`: root bounds tightened by its bound changes.
inline std::pair<std::vector<double>, std::vector<double>> local_bounds(const MilpInstance& inst,
                                                                        const NodeState& node) {
  std::vector<double> lo = inst.lower, up = inst.upper;
  for (const auto& bc : node.bound_changes) {
    if (bc.is_upper) up[bc.var] = std::min(up[bc.var], bc.value);
    else lo[bc.var] = std::max(lo[bc.var], bc.value);
  }
  return {std::move(lo), std::move(up)};
}

/// Integer variables whose LP value is fractional beyond kIntegralityTol,
/// in ascending index order.
inline std::vector<Candidate> fractional_candidates(const MilpInstance& inst,
                                                    std::span<const double> lp_solution) {
  std::vector<Candidate> out;
  for (int j : inst.int_set) {
    if (!is_integral(lp_solution[j])) out.push_back({j, lp_solution[j]});
  }
  return out;
}

inline std::vector<Candidate> fractional_candidates(const MilpInstance& inst,
                                                    const NodeState& node) {
  if (node.lp_solution.empty()) throw InvalidConfig("node has no LP solution");
  return fractional_candidates(inst, node.lp_solution);
}

/// Left child gets x_j <= floor(v), right child x_j >= ceil(v). Ids, GUBs
/// and LP data are filled in by the engine.
inline std::pair<NodeState, NodeState> child_states(const NodeState& parent,
                                                    const BranchAction& action) {
  NodeState left, right;
  for (NodeState* c : {&left, &right}) {
    c->parent_id = parent.node_id;
    c->depth = parent.depth + 1;
    c->bound_changes = parent.bound_changes;
    c->estimate = parent.local_lb;
  }
  left.is_left_child = true;
  left.bound_changes.push_back({action.var, true, std::floor(action.split_value)});
  right.bound_changes.push_back({action.var, false, std::ceil(action.split_value)});
  return {std::move(left), std::move(right)};
}

/// Running means of per-unit objective gains, per variable and direction.
class PseudocostTable {
 public:
  PseudocostTable() = default;
  explicit PseudocostTable(int n_vars) : sum_(2 * n_vars, 0.0), count_(2 * n_vars, 0) {}

  void record(int var, bool up, double per_unit_gain) {
    const auto k = slot(var, up);
    sum_[k] += std::max(per_unit_gain, 0.0);
    ++count_[k];
  }

  [[nodiscard]] int count(int var, bool up) const { return count_[slot(var, up)]; }

  [[nodiscard]] std::optional<double> mean(int var, bool up) const {
    const auto k = slot(var, up);
    if (count_[k] == 0) return std::nullopt;
    return sum_[k] / count_[k];
  }

  /// Mean over variables with observations in that direction, or 1 if none.
  [[nodiscard]] double average(bool up) const {
    double s = 0.0;
    int n = 0;
    for (std::size_t v = 0; v < sum_.size() / 2; ++v) {
      const auto k = 2 * v + (up ? 1 : 0);
      if (count_[k] > 0) {
        s += sum_[k] / count_[k];
        ++n;
      }
    }
    return n > 0 ? s / n : 1.0;
  }

  [[nodiscard]] double estimate(int var, bool up) const {
    const auto m = mean(var, up);
    return m ? *m : average(up);
  }

  [[nodiscard]] bool all_non_negative() const {
    return std::all_of(sum_.begin(), sum_.end(), [](double v) { return v >= 0.0; });
  }

 private:
  std::vector<double> sum_;
  std::vector<int> count_;

  [[nodiscard]] std::size_t slot(int var, bool up) const {
    return 2 * static_cast<std::size_t>(var) + (up ? 1 : 0);
  }
};

/// Per-instance column statistics, computed once per solve.
struct InstanceStats {
  std::vector<int> col_count;
  std::vector<double> col_mean_abs;
  double max_abs_coef = 0.0;
  double max_abs_obj = 0.0;

  InstanceStats() = default;
  explicit InstanceStats(const MilpInstance& inst)
      : col_count(inst.n_vars(), 0), col_mean_abs(inst.n_vars(), 0.0) {
    for (std::size_t k = 0; k < inst.rows.nnz(); ++k) {
      const int j = inst.rows.col_index[k];
      const double a = std::abs(inst.rows.values[k]);
      ++col_count[j];
      col_mean_abs[j] += a;
      max_abs_coef = std::max(max_abs_coef, a);
    }
    for (int j = 0; j < inst.n_vars(); ++j) {
      if (col_count[j] > 0) col_mean_abs[j] /= col_count[j];
    }
    for (double c : inst.obj) max_abs_obj = std::max(max_abs_obj, std::abs(c));
  }
};

/// Everything a branching rule may look at when choosing among candidates.
struct BranchContext {
  const MilpInstance& instance;
  const InstanceStats& stats;
  const NodeState& node;
  std::span<const Candidate> candidates;
  std::span<const double> lower;  // local domain
  std::span<const double> upper;
  double gub = kInf;
  PseudocostTable& pseudocosts;
  /// Filled by the engine when the rule or the config asks for features.
  const std::vector<FeatureVector>* features = nullptr;

  /// Solves the LP of one child of this node without touching solver state.
  [[nodiscard]] LpResult probe_child(int var, bool up_branch, double split_value) const {
    std::vector<double> lo(lower.begin(), lower.end()), up(upper.begin(), upper.end());
    if (up_branch) lo[var] = std::max(lo[var], std::ceil(split_value));
    else up[var] = std::min(up[var], std::floor(split_value));
    return solve_lp(instance.rows, instance.obj, instance.rhs, lo, up);
  }
};

struct BranchDecision {
  int candidate_index = 0;
};

/// A branching rule. Rules may keep per-solve state; the engine clones the
/// configured rule at the start of every solve and calls begin_solve once.
class BranchingRule {
 public:
  virtual ~BranchingRule() = default;
  virtual void begin_solve(const MilpInstance& /*inst*/, std::uint64_t /*seed*/) {}
  virtual BranchDecision select(const BranchContext& ctx) = 0;
  [[nodiscard]] virtual bool needs_features() const { return false; }
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::unique_ptr<BranchingRule> clone() const = 0;
};

}  // namespace treebnb
