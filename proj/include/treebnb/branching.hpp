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
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "treebnb/bnb_types.hpp"
#include "treebnb/policy.hpp"

namespace treebnb {

inline constexpr double kStrongEpsilon = 1e-6;
inline constexpr double kStrongInfeasibleGain = 1e7;

struct CandidateScore {
  int var = -1;
  double score = 0.0;
  double down_gain = 0.0;
  double up_gain = 0.0;
};

inline double strong_score(double down_gain, double up_gain) {
  return std::max(down_gain, kStrongEpsilon) * std::max(up_gain, kStrongEpsilon);
}

/// Product score of every candidate from tentative child LP solves. Touches
/// no solver state: GUB, statuses and pseudocosts are left as they were.
inline std::vector<CandidateScore> strong_branching_labels(const BranchContext& ctx) {
  std::vector<CandidateScore> out;
  out.reserve(ctx.candidates.size());
  const double base = ctx.node.local_lb;
  for (const auto& c : ctx.candidates) {
    CandidateScore s;
    s.var = c.var;
    const auto down = ctx.probe_child(c.var, false, c.value);
    const auto up = ctx.probe_child(c.var, true, c.value);
    s.down_gain = down.optimal() ? std::max(down.obj_value - base, 0.0) : kStrongInfeasibleGain;
    s.up_gain = up.optimal() ? std::max(up.obj_value - base, 0.0) : kStrongInfeasibleGain;
    s.score = strong_score(s.down_gain, s.up_gain);
    out.push_back(s);
  }
  return out;
}

/// Index of the best score, lowest variable index on ties.
inline int best_scored(const std::vector<CandidateScore>& scores) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(scores.size()); ++k) {
    const auto& a = scores[k];
    const auto& b = scores[best];
    if (a.score > b.score || (a.score == b.score && a.var < b.var)) best = k;
  }
  return best;
}

class RandomRule final : public BranchingRule {
 public:
  void begin_solve(const MilpInstance&, std::uint64_t seed) override { rng_.seed(mix_seed(seed, 11)); }
  BranchDecision select(const BranchContext& ctx) override {
    const int k = static_cast<int>(ctx.candidates.size());
    return {std::uniform_int_distribution<int>(0, k - 1)(rng_)};
  }
  [[nodiscard]] std::string name() const override { return "random"; }
  [[nodiscard]] std::unique_ptr<BranchingRule> clone() const override {
    return std::make_unique<RandomRule>(*this);
  }

 private:
  std::mt19937_64 rng_;
};

class StrongBranchingRule final : public BranchingRule {
 public:
  BranchDecision select(const BranchContext& ctx) override {
    if (ctx.candidates.size() == 1) return {0};
    return {best_scored(strong_branching_labels(ctx))};
  }
  [[nodiscard]] std::string name() const override { return "strong"; }
  [[nodiscard]] std::unique_ptr<BranchingRule> clone() const override {
    return std::make_unique<StrongBranchingRule>(*this);
  }
};

/// Reliability pseudocost branching. Candidates with fewer than `reliability`
/// observations in either direction are scored by strong branching (which also
/// feeds the table); the rest use the product of their pseudocost estimates
/// times the distance to the rounded value.
class PseudocostRule final : public BranchingRule {
 public:
  explicit PseudocostRule(int reliability = 4) : reliability_(reliability) {}

  BranchDecision select(const BranchContext& ctx) override {
    if (ctx.candidates.size() == 1) return {0};
    std::vector<CandidateScore> scores;
    scores.reserve(ctx.candidates.size());
    const double base = ctx.node.local_lb;
    for (const auto& c : ctx.candidates) {
      const double frac = c.value - std::floor(c.value);
      CandidateScore s;
      s.var = c.var;
      if (ctx.pseudocosts.count(c.var, false) < reliability_ ||
          ctx.pseudocosts.count(c.var, true) < reliability_) {
        const auto down = ctx.probe_child(c.var, false, c.value);
        const auto up = ctx.probe_child(c.var, true, c.value);
        s.down_gain = down.optimal() ? std::max(down.obj_value - base, 0.0) : kStrongInfeasibleGain;
        s.up_gain = up.optimal() ? std::max(up.obj_value - base, 0.0) : kStrongInfeasibleGain;
        if (down.optimal()) ctx.pseudocosts.record(c.var, false, s.down_gain / frac);
        if (up.optimal()) ctx.pseudocosts.record(c.var, true, s.up_gain / (1.0 - frac));
      } else {
        s.down_gain = ctx.pseudocosts.estimate(c.var, false) * frac;
        s.up_gain = ctx.pseudocosts.estimate(c.var, true) * (1.0 - frac);
      }
      s.score = strong_score(s.down_gain, s.up_gain);
      scores.push_back(s);
    }
    return {best_scored(scores)};
  }

  [[nodiscard]] std::string name() const override { return "pseudocost"; }
  [[nodiscard]] std::unique_ptr<BranchingRule> clone() const override {
    return std::make_unique<PseudocostRule>(*this);
  }

  /// Never reliable: every decision is a strong branching decision.
  static constexpr int kAlwaysStrong = std::numeric_limits<int>::max();

 private:
  int reliability_;
};

/// Branching with a policy network, either sampled or greedy.
class LearnedRule final : public BranchingRule {
 public:
  LearnedRule(std::shared_ptr<const PolicyParams> params, bool greedy)
      : params_(std::move(params)), greedy_(greedy) {}

  void begin_solve(const MilpInstance&, std::uint64_t seed) override { rng_.seed(mix_seed(seed, 23)); }

  BranchDecision select(const BranchContext& ctx) override {
    if (ctx.candidates.size() == 1) return {0};
    const auto& feats = *ctx.features;
    if (greedy_) return {greedy_action(*params_, feats)};
    return {sample_action(*params_, feats, rng_)};
  }

  [[nodiscard]] bool needs_features() const override { return true; }
  [[nodiscard]] std::string name() const override {
    return greedy_ ? "policy-greedy" : "policy";
  }
  [[nodiscard]] std::unique_ptr<BranchingRule> clone() const override {
    return std::make_unique<LearnedRule>(*this);
  }
  [[nodiscard]] const PolicyParams& params() const { return *params_; }

 private:
  std::shared_ptr<const PolicyParams> params_;
  bool greedy_;
  std::mt19937_64 rng_;
};

/// Parses random | strong | pseudocost | policy:<path> | policy-greedy:<path>.
inline std::shared_ptr<const BranchingRule> make_rule(const std::string& spec) {
  if (spec == "random") return std::make_shared<RandomRule>();
  if (spec == "strong") return std::make_shared<StrongBranchingRule>();
  if (spec == "pseudocost") return std::make_shared<PseudocostRule>();
  auto with_prefix = [&](const std::string& prefix) {
    return spec.size() > prefix.size() && spec.compare(0, prefix.size(), prefix) == 0;
  };
  if (with_prefix("policy-greedy:")) {
    auto p = std::make_shared<const PolicyParams>(load_policy(spec.substr(14)));
    return std::make_shared<LearnedRule>(std::move(p), true);
  }
  if (with_prefix("policy:")) {
    auto p = std::make_shared<const PolicyParams>(load_policy(spec.substr(7)));
    return std::make_shared<LearnedRule>(std::move(p), false);
  }
  throw InvalidConfig("unknown brancher '" + spec +
                      "' (expected random|strong|pseudocost|policy:<path>|policy-greedy:<path>)");
}

}  // namespace treebnb
