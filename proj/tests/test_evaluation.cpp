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

#include <atomic>
#include <cstdlib>

#include "oracles.hpp"
#include "treebnb/evaluation.hpp"
#include "treebnb/instance_gen.hpp"

using namespace treebnb;

TEST(Stats, GeometricMean) {
  EXPECT_NEAR(geometric_mean({1.0, 100.0}), 10.0, 1e-12);
  EXPECT_NEAR(geometric_mean({2.0, 2.0, 2.0}), 2.0, 1e-12);
  EXPECT_NEAR(geometric_mean({1.0, 2.0, 4.0}), 2.0, 1e-12);
  EXPECT_TRUE(std::isnan(geometric_mean({})));
}

TEST(Stats, PopulationStdPercent) {
  EXPECT_NEAR(std_percent({1.0, 3.0}), 50.0, 1e-12);
  EXPECT_NEAR(std_percent({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0}), 40.0, 1e-12);
  EXPECT_EQ(std_percent({5.0}), 0.0);
}

TEST(Stats, MethodLabels) {
  EXPECT_EQ(method_label("pseudocost"), "pseudocost (reliability)");
  EXPECT_EQ(method_label("strong"), "strong");
}

TEST(EvalReport, PairwiseCompleteMask) {
  EvalReport rep;
  rep.methods = {"a", "b"};
  rep.instances = {"i0", "i1"};
  rep.n_seeds = 2;
  auto add = [&](int i, int s, int m, long long nodes, SolveStatus st = SolveStatus::Optimal) {
    rep.runs.push_back({i, s, m, nodes, 0.5, st});
  };
  add(0, 0, 0, 10);
  add(0, 0, 1, 40);
  add(0, 1, 0, 20);
  add(0, 1, 1, 1000, SolveStatus::TimeLimit);  // drops (i0, s1) for both methods
  add(1, 0, 0, 5);
  add(1, 0, 1, 5);
  add(1, 1, 0, 5);
  add(1, 1, 1, 20);
  const auto mask = rep.complete_mask();
  EXPECT_TRUE(mask[0][0]);
  EXPECT_FALSE(mask[0][1]);
  EXPECT_TRUE(mask[1][0]);
  EXPECT_TRUE(mask[1][1]);
  const auto agg = rep.aggregates();
  EXPECT_EQ(agg[0].pairs, 3);
  EXPECT_EQ(agg[1].pairs, 3);
  EXPECT_NEAR(agg[0].gmean_nodes, std::cbrt(10.0 * 5 * 5), 1e-9);
  EXPECT_NEAR(agg[1].gmean_nodes, std::cbrt(40.0 * 5 * 20), 1e-9);
  EXPECT_EQ(agg[0].timeouts, 0);
  EXPECT_EQ(agg[1].timeouts, 1);
  // per-instance std%: i0 has one pair left (0%), i1 has {5, 20} for b (60%)
  EXPECT_NEAR(agg[0].std_percent, 0.0, 1e-12);
  EXPECT_NEAR(agg[1].std_percent, 30.0, 1e-12);
  EXPECT_EQ(eval_runs_csv(rep).rfind(kEvalCsvHeader, 0), 0u);
  EXPECT_NE(eval_runs_csv(rep).find("i0,1,b,1000,0.5,timelimit"), std::string::npos);
  EXPECT_NE(eval_markdown(rep, "T").find("| b | 15.9 | 30 |"), std::string::npos);
}

TEST(Parallel, CoversEveryIndexOnceAndRethrows) {
  for (int workers : {1, 2, 7}) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, workers, [&](int i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(20, workers,
                              [](int i) {
                                if (i == 13) throw InvalidConfig("boom");
                              }),
                 InvalidConfig);
  }
  parallel_for(0, 4, [](int) { FAIL(); });
}

TEST(Parallel, WorkersFromEnvironment) {
  setenv("TREEBNB_WORKERS", "3", 1);
  EXPECT_EQ(workers_from_env(), 3);
  setenv("TREEBNB_WORKERS", "zero", 1);
  EXPECT_EQ(workers_from_env(), 1);
  unsetenv("TREEBNB_WORKERS");
  EXPECT_EQ(workers_from_env(), 1);
}

TEST(Evaluate, DeterministicAndIndependentOfWorkers) {
  std::vector<MilpInstance> instances;
  for (Family f : kAllFamilies) instances.push_back(generate(oracle::enumerable_config(f, 1)));
  EvalOptions opt;
  opt.n_seeds = 2;
  opt.time_limit_seconds.reset();
  opt.seed = 4;
  const std::vector<std::string> specs{"random", "strong", "pseudocost"};
  const auto a = evaluate(specs, instances, opt);
  opt.workers = 4;
  const auto b = evaluate(specs, instances, opt);
  ASSERT_EQ(a.runs.size(), 5u * 2 * 3);
  for (std::size_t k = 0; k < a.runs.size(); ++k) {
    EXPECT_EQ(a.runs[k].node_count, b.runs[k].node_count);
    EXPECT_EQ(a.runs[k].status, SolveStatus::Optimal);
  }
  EXPECT_EQ(a.methods[2], "pseudocost (reliability)");
  for (const auto& agg : a.aggregates()) EXPECT_EQ(agg.pairs, 10);
}

TEST(Evaluate, NodeLimitCountsAsTimeout) {
  const std::vector<MilpInstance> instances{generate(default_config(Family::SetCover, 1))};
  EvalOptions opt;
  opt.n_seeds = 1;
  opt.node_limit = 3;
  const auto rep = evaluate({"random"}, instances, opt);
  EXPECT_EQ(rep.aggregates()[0].timeouts, 1);
  EXPECT_EQ(rep.aggregates()[0].pairs, 0);
  EXPECT_TRUE(std::isnan(rep.aggregates()[0].gmean_nodes));
}

TEST(Evaluate, RejectsBadInput) {
  EvalOptions opt;
  const std::vector<MilpInstance> one{counterexample_instance()};
  EXPECT_THROW(evaluate({"random"}, {}, opt), InvalidConfig);
  EXPECT_THROW(evaluate({}, one, opt), InvalidConfig);
  EXPECT_THROW(evaluate({"nope"}, one, opt), InvalidConfig);
  opt.n_seeds = 0;
  EXPECT_THROW(evaluate({"random"}, one, opt), InvalidConfig);
}
