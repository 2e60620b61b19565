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

// Vanilla branch-and-bound: no presolve, cuts, heuristics or restarts.
//
// Every created node is processed (its LP is solved) before the run ends, so a
// completed tree has no open nodes and the tree size equals the number of LP
// solves. A processed node becomes exactly one of
//   - LeafInfeasible       the LP is infeasible
//   - LeafPruned           local_lb >= GUB - feas_tol
//   - LeafIntegerFeasible  the LP optimum is integral (GUB updated)
//   - Branched             two children created by the branching rule

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "treebnb/bnb_types.hpp"
#include "treebnb/common.hpp"
#include "treebnb/features.hpp"
#include "treebnb/lp_simplex.hpp"
#include "treebnb/milp.hpp"

namespace treebnb {

enum class NodeSelection {
  BestFirst,     // lowest parent bound, then creation order
  DfsLeftFirst,  // depth-first, left child first
  DfsRightFirst  // depth-first, right child first (diagnostic variant)
};

inline const char* to_string(NodeSelection s) {
  switch (s) {
    case NodeSelection::BestFirst: return "best-first";
    case NodeSelection::DfsLeftFirst: return "dfs";
    case NodeSelection::DfsRightFirst: return "dfs-right";
  }
  return "?";
}

struct SolveConfig {
  NodeSelection node_selection = NodeSelection::BestFirst;
  /// ObjLim mode: the optimal value, used as the initial GUB.
  std::optional<double> objective_limit;
  std::optional<long long> node_limit;
  std::optional<double> time_limit_seconds;
  std::shared_ptr<const BranchingRule> rule;
  std::uint64_t rng_seed = 0;
  /// Store candidate features at every branched node, whatever the rule.
  bool record_features = false;

  void validate() const {
    if (!rule) throw InvalidConfig("solve config has no branching rule");
    if (node_limit && *node_limit < 1) throw InvalidConfig("node limit must be >= 1");
    if (time_limit_seconds && *time_limit_seconds <= 0.0) {
      throw InvalidConfig("time limit must be positive");
    }
  }
};

enum class SolveStatus {
  Optimal,         // incumbent found and proven optimal
  ObjLimitProved,  // no solution better than the objective limit exists
  Infeasible,
  Unbounded,
  NodeLimit,
  TimeLimit,
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::ObjLimitProved: return "objlimit";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NodeLimit: return "nodelimit";
    case SolveStatus::TimeLimit: return "timelimit";
  }
  return "?";
}

struct SolveReport {
  std::string instance_name;
  SolveStatus status = SolveStatus::Infeasible;
  double obj = kInf;  // final GUB
  double glb = -kInf;
  /// Smallest bound over processed leaves: a proof that no solution below it exists.
  double leaf_bound_min = kInf;
  std::optional<MilpSolution> incumbent;
  std::vector<NodeState> nodes;  // indexed by node_id (creation order)
  std::vector<int> processed_order;
  long long node_count = 0;
  double wall_time = 0.0;
  NodeSelection node_selection = NodeSelection::BestFirst;
  std::optional<double> objective_limit;
  std::string rule_name;

  [[nodiscard]] bool complete() const {
    return status != SolveStatus::NodeLimit && status != SolveStatus::TimeLimit;
  }
  [[nodiscard]] bool solved() const {
    return status == SolveStatus::Optimal || status == SolveStatus::ObjLimitProved;
  }
};

namespace detail {

class BnbSolver {
 public:
  BnbSolver(const MilpInstance& inst, const SolveConfig& cfg)
      : inst_(inst), cfg_(cfg), stats_(inst), pseudocosts_(inst.n_vars()) {}

  SolveReport run() {
    const auto t0 = std::chrono::steady_clock::now();
    rule_ = cfg_.rule->clone();
    rule_->begin_solve(inst_, cfg_.rng_seed);
    gub_ = cfg_.objective_limit.value_or(kInf);

    report_.instance_name = inst_.name;
    report_.node_selection = cfg_.node_selection;
    report_.objective_limit = cfg_.objective_limit;
    report_.rule_name = rule_->name();

    NodeState root;
    root.node_id = 0;
    report_.nodes.push_back(std::move(root));
    push_open(0);

    bool unbounded = false;
    std::optional<SolveStatus> aborted;
    while (!open_empty()) {
      if (cfg_.node_limit && report_.node_count >= *cfg_.node_limit) {
        aborted = SolveStatus::NodeLimit;
        break;
      }
      if (cfg_.time_limit_seconds && elapsed(t0) > *cfg_.time_limit_seconds) {
        aborted = SolveStatus::TimeLimit;
        break;
      }
      const int id = pop_open();
      if (!process(id)) {
        unbounded = true;
        break;
      }
    }

    report_.wall_time = elapsed(t0);
    finalize(unbounded, aborted);
    return std::move(report_);
  }

 private:
  const MilpInstance& inst_;
  const SolveConfig& cfg_;
  InstanceStats stats_;
  PseudocostTable pseudocosts_;
  std::unique_ptr<BranchingRule> rule_;
  SolveReport report_;
  double gub_ = kInf;

  // Open set. Best-first: (estimate, id) ordered; DFS: stack.
  std::set<std::pair<double, int>> best_first_;
  std::vector<int> stack_;
  std::multiset<double> open_bounds_;

  static double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  [[nodiscard]] bool open_empty() const {
    return cfg_.node_selection == NodeSelection::BestFirst ? best_first_.empty() : stack_.empty();
  }

  void push_open(int id) {
    const double est = report_.nodes[id].estimate;
    open_bounds_.insert(est);
    if (cfg_.node_selection == NodeSelection::BestFirst) best_first_.insert({est, id});
    else stack_.push_back(id);
  }

  int pop_open() {
    int id;
    if (cfg_.node_selection == NodeSelection::BestFirst) {
      id = best_first_.begin()->second;
      best_first_.erase(best_first_.begin());
    } else {
      id = stack_.back();
      stack_.pop_back();
    }
    open_bounds_.erase(open_bounds_.find(report_.nodes[id].estimate));
    return id;
  }

  // Returns false when the LP relaxation is unbounded.
  bool process(int id) {
    NodeState& node = report_.nodes[id];
    node.gub_at_processing = gub_;
    // this node is already off the queue; the incumbent also bounds the optimum
    node.glb_at_processing = std::min(node.estimate, gub_);
    if (!open_bounds_.empty()) {
      node.glb_at_processing = std::min(node.glb_at_processing, *open_bounds_.begin());
    }
    report_.processed_order.push_back(id);
    ++report_.node_count;

    auto [lo, up] = local_bounds(inst_, node);
    LpResult lp = solve_lp(inst_.rows, inst_.obj, inst_.rhs, lo, up);
    if (lp.status == LpStatus::Unbounded) {
      node.status = NodeStatus::LeafPruned;
      return false;
    }
    if (!lp.optimal()) {
      node.status = NodeStatus::LeafInfeasible;
      node.local_lb = kInf;
      return true;
    }
    node.local_lb = lp.obj_value;
    node.lp_solution = std::move(lp.x);
    record_pseudocost(node);

    if (node.local_lb >= gub_ - kFeasTol) {
      node.status = NodeStatus::LeafPruned;
      return true;
    }
    const auto cands = fractional_candidates(inst_, node.lp_solution);
    if (cands.empty()) {
      node.status = NodeStatus::LeafIntegerFeasible;
      if (node.local_lb < gub_ - kFeasTol) {
        gub_ = node.local_lb;
        report_.incumbent = MilpSolution{node.lp_solution, node.local_lb, true};
      }
      return true;
    }

    std::vector<FeatureVector> feats;
    BranchContext ctx{inst_, stats_, node, cands, lo, up, gub_, pseudocosts_, nullptr};
    const bool want_features = cfg_.record_features || rule_->needs_features();
    if (want_features) {
      feats = featurize(ctx);
      ctx.features = &feats;
    }
    const BranchDecision decision = rule_->select(ctx);
    if (decision.candidate_index < 0 ||
        decision.candidate_index >= static_cast<int>(cands.size())) {
      throw InvalidConfig("branching rule returned an invalid candidate index");
    }
    const Candidate& chosen = cands[decision.candidate_index];
    const BranchAction action{chosen.var, chosen.value};
    if (want_features) node.decision = DecisionRecord{std::move(feats), decision.candidate_index};
    node.action = action;
    node.status = NodeStatus::Branched;

    auto [left, right] = child_states(node, action);
    const int left_id = static_cast<int>(report_.nodes.size());
    left.node_id = left_id;
    right.node_id = left_id + 1;
    node.left_child = left_id;
    node.right_child = left_id + 1;
    // `node` may dangle after these pushes.
    report_.nodes.push_back(std::move(left));
    report_.nodes.push_back(std::move(right));
    if (cfg_.node_selection == NodeSelection::DfsRightFirst) {
      push_open(left_id);
      push_open(left_id + 1);
    } else if (cfg_.node_selection == NodeSelection::DfsLeftFirst) {
      push_open(left_id + 1);
      push_open(left_id);
    } else {
      push_open(left_id);
      push_open(left_id + 1);
    }
    return true;
  }

  void record_pseudocost(const NodeState& node) {
    if (node.parent_id < 0) return;
    const NodeState& parent = report_.nodes[node.parent_id];
    const double v = parent.action->split_value;
    const double frac = v - std::floor(v);
    const double dist = node.is_left_child ? frac : 1.0 - frac;
    if (dist <= 0.0) return;
    pseudocosts_.record(parent.action->var, !node.is_left_child,
                        (node.local_lb - parent.local_lb) / dist);
  }

  void finalize(bool unbounded, std::optional<SolveStatus> aborted) {
    double leaf_min = kInf;
    for (int id : report_.processed_order) {
      const auto& n = report_.nodes[id];
      if (n.is_leaf()) leaf_min = std::min(leaf_min, n.local_lb);
    }
    report_.leaf_bound_min = leaf_min;
    report_.obj = gub_;
    if (unbounded) {
      report_.status = SolveStatus::Unbounded;
      report_.obj = -kInf;
      report_.glb = -kInf;
      return;
    }
    if (aborted) {
      report_.status = *aborted;
      double glb = open_bounds_.empty() ? kInf : *open_bounds_.begin();
      report_.glb = std::min({glb, gub_, leaf_min});
      return;
    }
    report_.glb = std::min(gub_, leaf_min);
    if (report_.incumbent) report_.status = SolveStatus::Optimal;
    else if (cfg_.objective_limit) report_.status = SolveStatus::ObjLimitProved;
    else report_.status = SolveStatus::Infeasible;
  }
};

}  // namespace detail

inline SolveReport solve(const MilpInstance& inst, const SolveConfig& cfg) {
  inst.validate();
  cfg.validate();
  return detail::BnbSolver(inst, cfg).run();
}

enum class ProbeMode { ObjLim, Dfs };

struct GubViolation {
  int node_id = -1;
  double expected = 0.0;
  double actual = 0.0;
};

/// ObjLim: every processed node saw GUB == objective limit.
/// Dfs: every processed left child saw its parent's GUB.
inline std::vector<GubViolation> gub_invariant_probe(const SolveReport& report, ProbeMode mode) {
  std::vector<GubViolation> out;
  auto same = [](double a, double b) { return a == b || std::abs(a - b) <= kFeasTol; };
  for (int id : report.processed_order) {
    const auto& n = report.nodes[id];
    if (mode == ProbeMode::ObjLim) {
      const double lim = report.objective_limit.value_or(kInf);
      if (!same(n.gub_at_processing, lim)) out.push_back({id, lim, n.gub_at_processing});
    } else if (n.parent_id >= 0 && n.is_left_child) {
      const double pg = report.nodes[n.parent_id].gub_at_processing;
      if (!same(n.gub_at_processing, pg)) out.push_back({id, pg, n.gub_at_processing});
    }
  }
  return out;
}

}  // namespace treebnb
