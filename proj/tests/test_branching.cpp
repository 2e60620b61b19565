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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "treebnb/bnb.hpp"
#include "treebnb/branching.hpp"
#include "treebnb/features.hpp"
#include "treebnb/instance_gen.hpp"

using namespace treebnb;

namespace {

/// Root context of an instance, owning everything the context refers to.
struct RootFixture {
  MilpInstance inst;
  InstanceStats stats;
  NodeState node;
  std::vector<Candidate> cands;
  PseudocostTable pc;
  std::vector<FeatureVector> feats;

  explicit RootFixture(MilpInstance i) : inst(std::move(i)), stats(inst), pc(inst.n_vars()) {
    node.node_id = 0;
    const auto lp = solve_lp(lp_relaxation(inst));
    node.local_lb = lp.obj_value;
    node.lp_solution = lp.x;
    cands = fractional_candidates(inst, node);
  }

  BranchContext ctx() {
    BranchContext c{inst, stats, node, cands, inst.lower, inst.upper, kInf, pc, nullptr};
    feats = featurize(c);
    c.features = &feats;
    return c;
  }
};

// min t_a + t_b with t_a >= 4|a - 1/2| and t_b >= 2|b - 1/2|, a, b binary,
// t continuous. Root LP: a = b = 1/2. Branching on a costs 2 on both sides,
// on b costs 1 on both sides.
MilpInstance two_candidate_instance() {
  MilpInstance inst;
  inst.name = "two-candidates";
  // variables: b, a, t_b, t_a (b listed first so the better candidate is not index 0)
  inst.obj = {0, 0, 1, 1};
  inst.rows = SparseMatrix::from_triplets(
      4, 4,
      {{0, 1, 4}, {0, 3, -1}, {1, 1, -4}, {1, 3, -1}, {2, 0, 2}, {2, 2, -1}, {3, 0, -2}, {3, 2, -1}});
  inst.rhs = {2, -2, 1, -1};
  inst.lower = {0, 0, 0, 0};
  inst.upper = {1, 1, kInf, kInf};
  inst.int_set = {0, 1};
  return inst;
}

std::vector<std::shared_ptr<const BranchingRule>> all_rules() {
  auto params = std::make_shared<const PolicyParams>(PolicyParams::random(4, 8));
  return {std::make_shared<RandomRule>(), std::make_shared<StrongBranchingRule>(),
          std::make_shared<PseudocostRule>(), std::make_shared<LearnedRule>(params, false),
          std::make_shared<LearnedRule>(params, true)};
}

/// Runs strong branching labels and throws the result away, then defers.
class ProbeThen final : public BranchingRule {
 public:
  explicit ProbeThen(std::shared_ptr<const BranchingRule> inner) : inner_(inner->clone()) {}
  ProbeThen(const ProbeThen& o) : inner_(o.inner_->clone()) {}
  void begin_solve(const MilpInstance& inst, std::uint64_t seed) override { inner_->begin_solve(inst, seed); }
  BranchDecision select(const BranchContext& ctx) override {
    (void)strong_branching_labels(ctx);
    return inner_->select(ctx);
  }
  [[nodiscard]] std::string name() const override { return "probe-then"; }
  [[nodiscard]] std::unique_ptr<BranchingRule> clone() const override {
    return std::make_unique<ProbeThen>(*this);
  }

 private:
  std::unique_ptr<BranchingRule> inner_;
};

std::vector<std::optional<BranchAction>> actions(const SolveReport& r) {
  std::vector<std::optional<BranchAction>> out;
  for (int id : r.processed_order) out.push_back(r.nodes[id].action);
  return out;
}

}  // namespace

TEST(Branching, SingleCandidateAlwaysChosen) {
  RootFixture fx(counterexample_instance());
  ASSERT_EQ(fx.cands.size(), 1u);
  for (const auto& proto : all_rules()) {
    auto rule = proto->clone();
    rule->begin_solve(fx.inst, 1);
    EXPECT_EQ(rule->select(fx.ctx()).candidate_index, 0) << rule->name();
  }
}

TEST(Branching, StrongPrefersLargerProductScore) {
  RootFixture fx(two_candidate_instance());
  ASSERT_EQ(fx.cands.size(), 2u);
  const auto scores = strong_branching_labels(fx.ctx());
  EXPECT_EQ(scores[0].var, 0);
  EXPECT_NEAR(scores[0].score, 1.0, 1e-9);
  EXPECT_NEAR(scores[1].score, 4.0, 1e-9);
  StrongBranchingRule rule;
  EXPECT_EQ(rule.select(fx.ctx()).candidate_index, 1);

  // the same gains from independent child LP solves
  for (int var : {0, 1}) {
    for (bool up : {false, true}) {
      LpProblem p = lp_relaxation(fx.inst);
      (up ? p.lower : p.upper)[var] = up ? 1.0 : 0.0;
      const auto r = solve_lp(p);
      ASSERT_TRUE(r.optimal());
      EXPECT_NEAR(r.obj_value - fx.node.local_lb, var == 1 ? 2.0 : 1.0, 1e-9);
    }
  }
  const auto rep = solve(fx.inst, [] {
    SolveConfig c;
    c.rule = std::make_shared<StrongBranchingRule>();
    return c;
  }());
  EXPECT_EQ(rep.nodes[0].action->var, 1);
}

TEST(Branching, InfeasibleChildrenGetLargeGain) {
  EXPECT_EQ(strong_score(kStrongInfeasibleGain, kStrongInfeasibleGain), 1e14);
  EXPECT_EQ(strong_score(0.0, 3.0), kStrongEpsilon * 3.0);
  // x binary at 0.5 with both children infeasible: 0.4 <= x <= 0.6 via rows
  MilpInstance inst = counterexample_instance();
  inst.rows = SparseMatrix::from_triplets(2, 1, {{0, 0, -1.0}, {1, 0, 1.0}});
  inst.rhs = {-0.4, 0.6};
  inst.upper = {1.0};
  RootFixture fx(inst);
  ASSERT_EQ(fx.cands.size(), 1u);
  const auto s = strong_branching_labels(fx.ctx());
  EXPECT_EQ(s[0].score, kStrongInfeasibleGain * kStrongInfeasibleGain);
}

TEST(Branching, LabelsInvariantToCandidateOrder) {
  RootFixture fx(generate(default_config(Family::SetCover, 2)));
  ASSERT_GT(fx.cands.size(), 2u);
  const auto a = strong_branching_labels(fx.ctx());
  std::reverse(fx.cands.begin(), fx.cands.end());
  const auto b = strong_branching_labels(fx.ctx());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& rb = b[b.size() - 1 - k];
    EXPECT_EQ(a[k].var, rb.var);
    EXPECT_EQ(a[k].score, rb.score);
  }
  EXPECT_EQ(a[best_scored(a)].var, b[best_scored(b)].var);
}

TEST(Branching, ArgmaxMatchesIndependentRecomputation) {
  int checked = 0;
  for (Family f : kAllFamilies) {
    for (std::uint64_t s = 0; s < 12; ++s) {
      RootFixture fx(generate(f == Family::MaxIndepSet ? default_config(f, s)
                                                       : oracle::enumerable_config(f, s)));
      if (fx.cands.size() < 2) continue;
      ++checked;
      const auto scores = strong_branching_labels(fx.ctx());
      int best_var = -1;
      double best = -1.0;
      for (const auto& c : fx.cands) {
        double gain[2];
        for (int side = 0; side < 2; ++side) {
          LpProblem p = lp_relaxation(fx.inst);
          if (side == 0) p.upper[c.var] = std::floor(c.value);
          else p.lower[c.var] = std::ceil(c.value);
          const auto r = solve_lp(p);
          gain[side] = r.optimal() ? std::max(r.obj_value - fx.node.local_lb, 0.0) : 1e7;
        }
        const double sc = std::max(gain[0], 1e-6) * std::max(gain[1], 1e-6);
        if (sc > best) {  // strict: the lowest index wins ties
          best = sc;
          best_var = c.var;
        }
      }
      EXPECT_EQ(scores[best_scored(scores)].var, best_var);
    }
  }
  EXPECT_GE(checked, 20);
}

TEST(Branching, RandomRuleReproducible) {
  const auto inst = generate(default_config(Family::SetCover, 4));
  SolveConfig cfg;
  cfg.rule = std::make_shared<RandomRule>();
  cfg.rng_seed = 99;
  EXPECT_EQ(actions(solve(inst, cfg)), actions(solve(inst, cfg)));
}

TEST(Branching, StrongBranchingHasNoSideEffects) {
  for (Family f : kAllFamilies) {
    const auto inst = generate(default_config(f, 5));
    for (auto sel : {NodeSelection::BestFirst, NodeSelection::DfsLeftFirst}) {
      SolveConfig plain;
      plain.node_selection = sel;
      plain.rule = std::make_shared<RandomRule>();
      plain.rng_seed = 3;
      SolveConfig probed = plain;
      probed.rule = std::make_shared<ProbeThen>(plain.rule);
      plain.node_limit = probed.node_limit = 300;
      const auto a = solve(inst, plain);
      const auto b = solve(inst, probed);
      EXPECT_EQ(a.processed_order, b.processed_order);
      EXPECT_EQ(actions(a), actions(b));
      ASSERT_EQ(a.nodes.size(), b.nodes.size());
      for (std::size_t k = 0; k < a.nodes.size(); ++k) {
        EXPECT_EQ(a.nodes[k].status, b.nodes[k].status);
        EXPECT_EQ(a.nodes[k].gub_at_processing, b.nodes[k].gub_at_processing);
        EXPECT_EQ(a.nodes[k].glb_at_processing, b.nodes[k].glb_at_processing);
      }
    }
  }
}

TEST(Branching, PseudocostWithoutReliabilityEqualsStrong) {
  for (Family f : kAllFamilies) {
    for (std::uint64_t s = 0; s < 2; ++s) {
      const auto inst = generate(default_config(f, s));
      SolveConfig strong;
      strong.node_limit = 200;
      strong.rule = std::make_shared<StrongBranchingRule>();
      SolveConfig pc = strong;
      pc.rule = std::make_shared<PseudocostRule>(PseudocostRule::kAlwaysStrong);
      EXPECT_EQ(actions(solve(inst, strong)), actions(solve(inst, pc))) << inst.name;
    }
  }
}

TEST(Branching, PseudocostsStayNonNegative) {
  class Watch final : public BranchingRule {
   public:
    BranchDecision select(const BranchContext& ctx) override {
      EXPECT_TRUE(ctx.pseudocosts.all_non_negative());
      return inner_.select(ctx);
    }
    [[nodiscard]] std::string name() const override { return "watch"; }
    [[nodiscard]] std::unique_ptr<BranchingRule> clone() const override {
      return std::make_unique<Watch>(*this);
    }

   private:
    PseudocostRule inner_;
  };
  SolveConfig cfg;
  cfg.rule = std::make_shared<Watch>();
  for (Family f : kAllFamilies) solve(generate(default_config(f, 1)), cfg);
}

TEST(Branching, MakeRuleParsesSpecs) {
  EXPECT_EQ(make_rule("random")->name(), "random");
  EXPECT_EQ(make_rule("strong")->name(), "strong");
  EXPECT_EQ(make_rule("pseudocost")->name(), "pseudocost");
  EXPECT_THROW(make_rule("hybrid"), InvalidConfig);
  EXPECT_THROW(make_rule("policy:/nonexistent/p.txt"), Error);
}

TEST(Features, CounterexampleRoot) {
  RootFixture fx(counterexample_instance());
  const auto f = featurize(fx.ctx());
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NEAR(f[0][kFracPart], 0.6, 1e-12);
  EXPECT_NEAR(f[0][kFractionality], 0.8, 1e-12);
  EXPECT_NEAR(f[0][kPositionInDomain], 0.6 / 11.0, 1e-12);
  EXPECT_NEAR(f[0][kDomainWidth], 10.0 / 11.0, 1e-12);
  EXPECT_EQ(f[0][kGubFinite], 0.0);
}

TEST(Features, BoundTightDomain) {
  MilpInstance inst = two_candidate_instance();
  RootFixture fx(inst);
  const auto f = featurize(fx.ctx());
  // binary variable at its root domain [0, 1]: width 1 / (1 + 1)
  EXPECT_NEAR(f[0][kDomainWidth], 0.5, 1e-12);
}

TEST(Features, RangesAndPermutationEquivariance) {
  RootFixture fx(generate(default_config(Family::FacilityLoc, 3)));
  ASSERT_GT(fx.cands.size(), 2u);
  const auto a = featurize(fx.ctx());
  for (const auto& v : a) {
    for (int k = 0; k < kNumFeatures; ++k) EXPECT_TRUE(std::isfinite(v[k]));
    for (int k : {0, 1, 3, 4, 5, 6, 10, 11}) {
      EXPECT_GE(v[k], 0.0);
      EXPECT_LE(v[k], 1.0);
    }
  }
  std::reverse(fx.cands.begin(), fx.cands.end());
  const auto b = featurize(fx.ctx());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k], b[a.size() - 1 - k]);
}
