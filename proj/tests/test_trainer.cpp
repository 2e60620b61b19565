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

#include <filesystem>
#include <random>
#include <set>

#include "oracles.hpp"
#include "treebnb/dataset.hpp"
#include "treebnb/instance_gen.hpp"
#include "treebnb/trainer.hpp"

using namespace treebnb;

namespace {

std::vector<DatasetEntry> small_set(int n, std::uint64_t base = 0) {
  std::vector<DatasetEntry> out;
  for (int i = 0; i < n; ++i) {
    const auto f = kAllFamilies[i % 5];
    auto inst = generate(oracle::enumerable_config(f, base + i));
    const auto bf = brute_force_solve(inst, 1u << 15);
    EXPECT_EQ(bf.status, BruteForceStatus::Solved);
    out.push_back({inst.name + ".json", inst, bf.solution.obj_value});
  }
  return out;
}

std::vector<TrainTuple> random_batch(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TrainTuple> out(n);
  for (auto& t : out) {
    const int k = 1 + static_cast<int>(u(rng) * 5);
    t.features.resize(k);
    for (auto& f : t.features) {
      for (auto& v : f) v = u(rng);
    }
    t.chosen = static_cast<int>(u(rng) * k);
    t.ret = -50.0 * u(rng);
  }
  return out;
}

void expect_same_log(const TrainLog& a, const TrainLog& b) {
  ASSERT_EQ(a.epochs.size(), b.epochs.size());
  for (std::size_t k = 0; k < a.epochs.size(); ++k) {
    auto x = a.epochs[k], y = b.epochs[k];
    x.elapsed_seconds = y.elapsed_seconds = 0.0;
    EXPECT_EQ(x, y) << "epoch " << k;
  }
}

}  // namespace

TEST(Regimes, SettingsTable) {
  EXPECT_EQ(regime_settings(Regime::TemporalMDP), (RegimeSettings{NodeSelection::BestFirst, false, false}));
  EXPECT_EQ(regime_settings(Regime::TreeDFS), (RegimeSettings{NodeSelection::DfsLeftFirst, false, true}));
  EXPECT_EQ(regime_settings(Regime::TreeObjLim), (RegimeSettings{NodeSelection::BestFirst, true, true}));
  for (Regime r : {Regime::TemporalMDP, Regime::TreeDFS, Regime::TreeObjLim}) {
    EXPECT_EQ(regime_from_string(to_string(r)), r);
  }
  EXPECT_THROW(regime_from_string("tmdp"), InvalidConfig);
}

TEST(Regimes, EpisodeConfig) {
  auto entries = small_set(1);
  auto rule = make_rule("random");
  const auto c = episode_config(Regime::TreeObjLim, entries[0], rule, 5, {});
  ASSERT_TRUE(c.objective_limit.has_value());
  EXPECT_EQ(*c.objective_limit, *entries[0].optimum);
  EXPECT_TRUE(c.record_features);
  EXPECT_EQ(episode_config(Regime::TreeDFS, entries[0], rule, 5, {}).node_selection,
            NodeSelection::DfsLeftFirst);
  EXPECT_FALSE(episode_config(Regime::TemporalMDP, entries[0], rule, 5, {}).objective_limit);
  entries[0].optimum.reset();
  EXPECT_THROW(episode_config(Regime::TreeObjLim, entries[0], rule, 5, {}), InvalidConfig);
}

TEST(BatchLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = PolicyParams::random(trial, 5);
    const auto batch = random_batch(1 + trial % 6, rng);
    const double lambda = 0.01 * (trial % 3);
    const double baseline = trial % 2 ? -20.0 : 0.0;
    const auto bl = batch_loss(p, batch, lambda, baseline);
    const auto fd = oracle::fd_gradient(
        p, [&](const PolicyParams& q) { return batch_loss(q, batch, lambda, baseline).loss; }, 1e-6);
    EXPECT_LT(oracle::max_rel_error(bl.grad.data, fd), 1e-5);
  }
}

TEST(BatchLoss, ClosedFormForOneTuple) {
  std::mt19937_64 rng(2);
  const auto p = PolicyParams::random(1, 4);
  const auto batch = random_batch(1, rng);
  const auto out = policy_forward(p, batch[0].features);
  const double h = entropy_of(out);
  const auto bl = batch_loss(p, batch, 0.5, 3.0);
  EXPECT_NEAR(bl.loss, -(batch[0].ret - 3.0) * out.log_probs[batch[0].chosen] - 0.5 * h, 1e-12);
  EXPECT_NEAR(bl.mean_entropy, h, 1e-12);
  const auto empty = batch_loss(p, {}, 0.5);
  EXPECT_EQ(empty.loss, 0.0);
  EXPECT_EQ(empty.grad.norm(), 0.0);
}

TEST(SampleTuples, CountsAndReturns) {
  const auto entries = small_set(5, 10);
  auto params = std::make_shared<const PolicyParams>(PolicyParams::random(1, 4));
  for (const auto& e : entries) {
    for (Regime r : {Regime::TemporalMDP, Regime::TreeDFS, Regime::TreeObjLim}) {
      const auto rep = solve(e.instance, episode_config(r, e, std::make_shared<LearnedRule>(params, false), 3, {}));
      ASSERT_TRUE(rep.complete());
      const auto tree = record_episode(rep);
      const bool tree_ret = regime_settings(r).tree_returns;
      const auto returns = tree_ret ? tree_returns(tree) : temporal_returns(tree);
      int decisions = 0;
      for (const auto& n : tree.nodes) decisions += n.leaf ? 0 : 1;
      for (double rate : {0.2, 0.5, 1.0}) {
        std::mt19937_64 rng(4);
        const auto tuples = sample_tuples(tree, tree_ret, rate, rng);
        EXPECT_EQ(static_cast<int>(tuples.size()), static_cast<int>(std::ceil(rate * decisions)));
        // every tuple matches exactly one decision node with its return
        for (const auto& t : tuples) {
          int matches = 0;
          for (const auto& nr : returns) {
            const auto& n = tree.nodes[nr.node];
            if (n.features == t.features && n.action == t.chosen && nr.value == t.ret) ++matches;
          }
          EXPECT_GE(matches, 1);
        }
      }
    }
  }
}

TEST(CollectEpisode, SkipsAbortedEpisodes) {
  const auto inst = generate(default_config(Family::SetCover, 7));
  const DatasetEntry e{"x.json", inst, std::nullopt};
  const auto p = PolicyParams::random(1, 4);
  EpisodeLimits tight;
  tight.node_limit = 2;
  const auto bad = collect_episode(p, Regime::TemporalMDP, e, 1, 0.2, tight);
  EXPECT_FALSE(bad.ok);
  EXPECT_TRUE(bad.tuples.empty());
  const auto good = collect_episode(p, Regime::TemporalMDP, e, 1, 0.2, {});
  EXPECT_TRUE(good.ok);
  EXPECT_GT(good.nodes, 0);
}

TEST(Reinforce, DeterministicAcrossWorkerCounts) {
  const auto train = small_set(6);
  TrainConfig cfg;
  cfg.regime = Regime::TreeObjLim;
  cfg.epochs = 4;
  cfg.instances_per_epoch = 3;
  cfg.hidden = 6;
  cfg.seed = 9;
  cfg.eval_interval = 2;
  cfg.validation_instances = instances_of(small_set(3, 50));
  const auto a = train_reinforce(train, cfg);
  cfg.workers = 3;
  const auto b = train_reinforce(train, cfg);
  expect_same_log(a.log, b.log);
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.log.epochs.size(), 5u);
  EXPECT_TRUE(a.log.epochs[0].validation_gmean.has_value());
  EXPECT_FALSE(a.log.epochs[1].validation_gmean.has_value());
  EXPECT_TRUE(a.log.epochs[2].validation_gmean.has_value());
  EXPECT_TRUE(a.log.epochs[4].validation_gmean.has_value());
  double best = kInf;
  for (const auto& [s, v] : a.log.validation_curve()) best = std::min(best, v);
  EXPECT_EQ(a.best_validation, best);
  // samples are cumulative node counts
  for (std::size_t k = 1; k < a.log.epochs.size(); ++k) {
    EXPECT_GE(a.log.epochs[k].samples_cumulative, a.log.epochs[k - 1].samples_cumulative);
  }
}

TEST(Reinforce, AllRegimesRun) {
  const auto train = small_set(5, 20);
  for (Regime r : {Regime::TemporalMDP, Regime::TreeDFS, Regime::TreeObjLim}) {
    TrainConfig cfg;
    cfg.regime = r;
    cfg.epochs = 3;
    cfg.instances_per_epoch = 2;
    cfg.hidden = 4;
    const auto res = train_reinforce(train, cfg);
    EXPECT_TRUE(res.params.all_finite());
    EXPECT_NE(res.params, PolicyParams::random(mix_seed(0, 1), 4));
    EXPECT_EQ(res.best_params, res.params);  // no validation set
  }
}

TEST(Reinforce, RejectsBadInputs) {
  auto train = small_set(2);
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train_reinforce({}, cfg), InvalidConfig);
  train[1].optimum.reset();
  EXPECT_THROW(train_reinforce(train, cfg), InvalidConfig);
  cfg.regime = Regime::TreeDFS;
  EXPECT_NO_THROW(train_reinforce(train, cfg));
  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& c) { c.learning_rate = 0.0; }, [](TrainConfig& c) { c.sample_rate = 1.5; },
           [](TrainConfig& c) { c.entropy_bonus = -1.0; }, [](TrainConfig& c) { c.epochs = -1; },
           [](TrainConfig& c) { c.hidden = 0; }, [](TrainConfig& c) { c.workers = 0; }}) {
    TrainConfig bad = cfg;
    mutate(bad);
    EXPECT_THROW(bad.validate(), InvalidConfig);
  }
}

TEST(Reinforce, LogCsvFormat) {
  TrainLog log;
  log.epochs.push_back({0, 0, 0, 0, 0.0, 0, 0.0, 0.0, 12.5, 0.1});
  log.epochs.push_back({1, 40, 2, 1, 20.0, 8, -3.5, 0.7, std::nullopt, 0.2});
  EXPECT_EQ(log.to_csv(),
            "# treebnb-trainlog v1\n"
            "epoch,samples_cumulative,episodes,skipped,mean_episode_nodes,tuples,loss,entropy,"
            "valid_gmean,elapsed_s\n"
            "0,0,0,0,0,0,0,0,12.5,0.1\n"
            "1,40,2,1,20,8,-3.5,0.7,,0.2\n");
}

TEST(Imitation, CrossEntropyGradient) {
  std::mt19937_64 rng(3);
  std::vector<ImitationSample> data;
  for (const auto& t : random_batch(8, rng)) data.push_back({t.features, t.chosen});
  const auto p = PolicyParams::random(2, 5);
  const auto ce = cross_entropy(p, data);
  const auto fd = oracle::fd_gradient(
      p, [&](const PolicyParams& q) { return cross_entropy(q, data).value; }, 1e-6);
  EXPECT_LT(oracle::max_rel_error(ce.grad.data, fd), 1e-6);
}

TEST(Imitation, FitsStrongBranchingLabels) {
  const auto instances = instances_of(small_set(10));
  const auto data = collect_strong_branching_samples(instances, 200, 1);
  ASSERT_FALSE(data.empty());
  for (const auto& s : data) {
    ASSERT_GE(s.features.size(), 2u);
    ASSERT_LT(s.label, static_cast<int>(s.features.size()));
  }
  ImitationConfig cfg;
  cfg.epochs = 30;
  cfg.hidden = 8;
  const auto init = PolicyParams::random(4, 8);
  const auto res = fit_imitation(init, data, cfg);
  ASSERT_EQ(res.log.size(), 30u);
  EXPECT_LT(res.log.back().loss, cross_entropy(init, data).value);
  EXPECT_GE(res.log.back().accuracy, greedy_accuracy(init, data));
}

TEST(Presolve, OptimaMatchBruteForce) {
  auto entries = small_set(10, 30);
  std::vector<double> truth;
  for (auto& e : entries) {
    truth.push_back(*e.optimum);
    e.optimum.reset();
  }
  presolve_optima(entries, "pseudocost", 2);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    ASSERT_TRUE(entries[k].optimum.has_value());
    EXPECT_NEAR(*entries[k].optimum, truth[k], 1e-6);
  }
}

TEST(Dataset, ManifestRoundTrip) {
  namespace fs = std::filesystem;
  const auto dir = fs::path(testing::TempDir()) / "treebnb-dataset";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto entries = small_set(3);
  entries[1].optimum.reset();
  entries[2].family = "setcover";
  entries[2].seed = 18446744073709551557ull;  // needs all 64 bits
  for (auto& e : entries) write_instance(e.instance, (dir / e.file).string());
  write_manifest(dir.string(), entries);
  const auto back = load_dataset(dir.string());
  ASSERT_EQ(back.size(), 3u);
  std::set<std::string> names;
  for (const auto& e : back) {
    names.insert(e.file);
    const auto it = std::find_if(entries.begin(), entries.end(),
                                 [&](const DatasetEntry& x) { return x.file == e.file; });
    ASSERT_NE(it, entries.end());
    EXPECT_EQ(e.optimum, it->optimum);
    EXPECT_EQ(e.family, it->family);
    EXPECT_EQ(e.seed, it->seed);
  }
  EXPECT_EQ(names.size(), 3u);
  EXPECT_THROW(load_dataset((dir / "missing").string()), Error);
  {
    std::ofstream bad(dir / kManifestName);
    bad << R"({"format": "treebnb-manifest", "version": 1, "instances": [{"file": 3}]})";
  }
  EXPECT_THROW(load_dataset(dir.string()), ParseError);
}
