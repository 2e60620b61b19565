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

// REINFORCE training of branching policies and imitation of strong branching.
//
// Regimes differ only in how episodes are collected and credited:
//
//   regime        node selection   objective limit   returns
//   mdp           best-first       none              temporal
//   tmdp-dfs      DFS left-first   none              tree
//   tmdp-objlim   best-first       optimum           tree

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "treebnb/bnb.hpp"
#include "treebnb/branching.hpp"
#include "treebnb/dataset.hpp"
#include "treebnb/evaluation.hpp"
#include "treebnb/policy.hpp"
#include "treebnb/tree_mdp.hpp"

namespace treebnb {

enum class Regime { TemporalMDP, TreeDFS, TreeObjLim };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::TemporalMDP: return "mdp";
    case Regime::TreeDFS: return "tmdp-dfs";
    case Regime::TreeObjLim: return "tmdp-objlim";
  }
  return "?";
}

inline Regime regime_from_string(const std::string& s) {
  if (s == "mdp") return Regime::TemporalMDP;
  if (s == "tmdp-dfs") return Regime::TreeDFS;
  if (s == "tmdp-objlim") return Regime::TreeObjLim;
  throw InvalidConfig("unknown regime '" + s + "' (expected mdp|tmdp-dfs|tmdp-objlim)");
}

struct RegimeSettings {
  NodeSelection node_selection = NodeSelection::BestFirst;
  bool objective_limit = false;
  bool tree_returns = false;

  friend bool operator==(const RegimeSettings&, const RegimeSettings&) = default;
};

inline RegimeSettings regime_settings(Regime r) {
  switch (r) {
    case Regime::TemporalMDP: return {NodeSelection::BestFirst, false, false};
    case Regime::TreeDFS: return {NodeSelection::DfsLeftFirst, false, true};
    case Regime::TreeObjLim: return {NodeSelection::BestFirst, true, true};
  }
  throw InvalidConfig("unknown regime");
}

struct EpisodeLimits {
  std::optional<long long> node_limit = 20000;
  std::optional<double> time_limit_seconds;
};

/// Solve config used to collect one training episode.
inline SolveConfig episode_config(Regime regime, const DatasetEntry& entry,
                                  std::shared_ptr<const BranchingRule> rule, std::uint64_t seed,
                                  const EpisodeLimits& limits) {
  const RegimeSettings rs = regime_settings(regime);
  SolveConfig cfg;
  cfg.node_selection = rs.node_selection;
  if (rs.objective_limit) {
    if (!entry.optimum) {
      throw InvalidConfig("instance " + entry.file + " has no precomputed optimum");
    }
    cfg.objective_limit = *entry.optimum;
  }
  cfg.rule = std::move(rule);
  cfg.rng_seed = seed;
  cfg.record_features = true;
  cfg.node_limit = limits.node_limit;
  cfg.time_limit_seconds = limits.time_limit_seconds;
  return cfg;
}

/// One (state, action, return) sample.
struct TrainTuple {
  std::vector<FeatureVector> features;
  int chosen = 0;
  double ret = 0.0;
};

struct BatchLoss {
  double loss = 0.0;
  double mean_entropy = 0.0;
  PolicyGradient grad;
};

/// L = -(1/n) sum (G - b) log pi(a|s) - lambda (1/n) sum H(pi(.|s)) and its
/// gradient; b is 0 unless a baseline is given.
inline BatchLoss batch_loss(const PolicyParams& params, const std::vector<TrainTuple>& batch,
                            double entropy_bonus, double baseline = 0.0) {
  BatchLoss out{0.0, 0.0, params.zeros_like()};
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& t : batch) {
    const PolicyOutput fwd = policy_forward(params, t.features);
    const double adv = t.ret - baseline;
    const double logp = accumulate_logprob_grad(params, t.features, t.chosen, -adv * inv_n,
                                                out.grad, &fwd);
    const double h = accumulate_entropy_grad(params, t.features, -entropy_bonus * inv_n,
                                             out.grad, &fwd);
    out.loss += -adv * inv_n * logp - entropy_bonus * inv_n * h;
    out.mean_entropy += h * inv_n;
  }
  return out;
}

/// Picks ceil(rate * k) of the k decision nodes of a complete episode,
/// uniformly without replacement, and attaches the regime's returns.
template <class Rng>
std::vector<TrainTuple> sample_tuples(const EpisodeTree& tree, bool use_tree_returns,
                                      double rate, Rng& rng) {
  const auto returns = use_tree_returns ? tree_returns(tree) : temporal_returns(tree);
  std::vector<int> eligible;
  for (int k = 0; k < static_cast<int>(returns.size()); ++k) {
    if (!tree.nodes[returns[k].node].features.empty()) eligible.push_back(k);
  }
  const auto want = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(eligible.size())));
  std::vector<int> picked;
  std::sample(eligible.begin(), eligible.end(), std::back_inserter(picked), want, rng);
  std::vector<TrainTuple> out;
  out.reserve(picked.size());
  for (int k : picked) {
    const auto& node = tree.nodes[returns[k].node];
    out.push_back({node.features, node.action, returns[k].value});
  }
  return out;
}

struct ValidationResult {
  double gmean_nodes = 0.0;
  double std_percent = 0.0;
  int timeouts = 0;
};

struct ValidationOptions {
  int n_seeds = 1;
  std::optional<long long> node_limit = 20000;
  std::optional<double> time_limit_seconds;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Greedy policy, best-first, no objective limit, whatever the training
/// regime was.
inline ValidationResult validate_policy(const PolicyParams& params,
                                        const std::vector<MilpInstance>& instances,
                                        const ValidationOptions& opt) {
  auto rule = std::make_shared<LearnedRule>(std::make_shared<const PolicyParams>(params), true);
  EvalOptions eo;
  eo.n_seeds = opt.n_seeds;
  eo.node_limit = opt.node_limit;
  eo.time_limit_seconds = opt.time_limit_seconds;
  eo.seed = opt.seed;
  eo.workers = opt.workers;
  const EvalReport rep = evaluate_rules({rule}, {"policy-greedy"}, instances, eo);
  const MethodAggregate agg = rep.aggregates().front();
  return {agg.gmean_nodes, agg.std_percent, agg.timeouts};
}

struct TrainConfig {
  Regime regime = Regime::TreeObjLim;
  int epochs = 100;
  std::optional<double> time_limit_seconds;  // whole training run
  double entropy_bonus = 0.01;
  double learning_rate = 0.03;
  double sample_rate = 0.2;
  int instances_per_epoch = 10;
  std::uint64_t seed = 0;
  int hidden = kDefaultHidden;
  bool mean_baseline = false;
  EpisodeLimits episode_limits;
  int workers = 1;
  // validation
  std::vector<MilpInstance> validation_instances;
  int eval_interval = 10;
  ValidationOptions validation;

  void validate() const {
    if (epochs < 0) throw InvalidConfig("epochs must be >= 0");
    if (time_limit_seconds && *time_limit_seconds <= 0.0) {
      throw InvalidConfig("time limit must be positive");
    }
    if (entropy_bonus < 0.0) throw InvalidConfig("entropy bonus must be >= 0");
    if (!(learning_rate > 0.0)) throw InvalidConfig("learning rate must be > 0");
    if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
      throw InvalidConfig("sample rate must lie in (0, 1]");
    }
    if (instances_per_epoch < 1) throw InvalidConfig("instances per epoch must be >= 1");
    if (hidden < 1) throw InvalidConfig("hidden size must be >= 1");
    if (eval_interval < 1) throw InvalidConfig("eval interval must be >= 1");
    if (workers < 1) throw InvalidConfig("workers must be >= 1");
  }
};

struct EpochRecord {
  int epoch = 0;                 // 0 is the initial (untrained) policy
  long long samples_cumulative = 0;
  int episodes = 0;
  int skipped = 0;
  double mean_episode_nodes = 0.0;
  int tuples = 0;
  double loss = 0.0;
  double entropy = 0.0;
  std::optional<double> validation_gmean;
  double elapsed_seconds = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  /// CSV, version 1:
  ///   epoch,samples_cumulative,episodes,skipped,mean_episode_nodes,tuples,
  ///   loss,entropy,valid_gmean,elapsed_s
  /// valid_gmean is empty on epochs without validation.
  [[nodiscard]] std::string to_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "# treebnb-trainlog v1\n"
          "epoch,samples_cumulative,episodes,skipped,mean_episode_nodes,tuples,loss,entropy,"
          "valid_gmean,elapsed_s\n";
    for (const auto& e : epochs) {
      os << e.epoch << ',' << e.samples_cumulative << ',' << e.episodes << ',' << e.skipped << ','
         << e.mean_episode_nodes << ',' << e.tuples << ',' << e.loss << ',' << e.entropy << ',';
      if (e.validation_gmean) os << *e.validation_gmean;
      os << ',' << e.elapsed_seconds << '\n';
    }
    return os.str();
  }

  /// (cumulative samples, validation value) at every validated epoch.
  [[nodiscard]] std::vector<std::pair<long long, double>> validation_curve() const {
    std::vector<std::pair<long long, double>> out;
    for (const auto& e : epochs) {
      if (e.validation_gmean) out.emplace_back(e.samples_cumulative, *e.validation_gmean);
    }
    return out;
  }
};

struct TrainResult {
  PolicyParams params;       // after the last epoch
  PolicyParams best_params;  // best validation value seen
  double best_validation = kInf;
  TrainLog log;
};

struct CollectedEpisode {
  bool ok = false;
  long long nodes = 0;
  std::vector<TrainTuple> tuples;
  std::string error;
};

/// Runs one stochastic-policy episode and extracts its training tuples.
inline CollectedEpisode collect_episode(const PolicyParams& params, Regime regime,
                                        const DatasetEntry& entry, std::uint64_t seed,
                                        double sample_rate, const EpisodeLimits& limits) {
  CollectedEpisode out;
  try {
    auto rule = std::make_shared<LearnedRule>(std::make_shared<const PolicyParams>(params), false);
    const SolveReport rep = solve(entry.instance, episode_config(regime, entry, rule, seed, limits));
    if (!rep.complete()) {
      out.error = "episode hit a solve limit";
      return out;
    }
    const EpisodeTree tree = record_episode(rep);
    std::mt19937_64 rng(mix_seed(seed, 31));
    out.tuples = sample_tuples(tree, regime_settings(regime).tree_returns, sample_rate, rng);
    out.nodes = rep.node_count;
    out.ok = true;
  } catch (const NumericalBreakdown& e) {
    out.error = e.what();
  }
  return out;
}

/// Plain REINFORCE with an entropy bonus. Each epoch collects
/// instances_per_epoch complete episodes with the current stochastic policy,
/// takes one gradient step on their sampled tuples, and validates every
/// eval_interval epochs (and before the first epoch).
inline TrainResult train_reinforce(const std::vector<DatasetEntry>& train_set, const TrainConfig& cfg,
                                   std::optional<PolicyParams> init = std::nullopt) {
  cfg.validate();
  if (train_set.empty()) throw InvalidConfig("empty training set");
  if (regime_settings(cfg.regime).objective_limit) {
    for (const auto& e : train_set) {
      if (!e.optimum) throw InvalidConfig("instance " + e.file + " has no precomputed optimum");
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  TrainResult res;
  res.params = init ? *init : PolicyParams::random(mix_seed(cfg.seed, 1), cfg.hidden);
  res.best_params = res.params;
  std::mt19937_64 rng(mix_seed(cfg.seed, 2));
  const bool validating = !cfg.validation_instances.empty();
  auto run_validation = [&](EpochRecord& rec) {
    if (!validating) return;
    const double v = validate_policy(res.params, cfg.validation_instances, cfg.validation).gmean_nodes;
    rec.validation_gmean = v;
    if (v < res.best_validation) {
      res.best_validation = v;
      res.best_params = res.params;
    }
  };

  EpochRecord initial;
  run_validation(initial);
  initial.elapsed_seconds = elapsed();
  res.log.epochs.push_back(initial);

  long long samples = 0;
  int consecutive_failures = 0;
  const int n_train = static_cast<int>(train_set.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.time_limit_seconds && elapsed() > *cfg.time_limit_seconds) break;
    std::vector<int> picks;
    if (n_train >= cfg.instances_per_epoch) {
      std::vector<int> all(n_train);
      std::iota(all.begin(), all.end(), 0);
      std::sample(all.begin(), all.end(), std::back_inserter(picks), cfg.instances_per_epoch, rng);
    } else {
      std::uniform_int_distribution<int> pick(0, n_train - 1);
      for (int k = 0; k < cfg.instances_per_epoch; ++k) picks.push_back(pick(rng));
    }
    std::vector<CollectedEpisode> episodes(picks.size());
    const std::uint64_t epoch_seed = rng();
    parallel_for(static_cast<int>(picks.size()), cfg.workers, [&](int k) {
      episodes[k] = collect_episode(res.params, cfg.regime, train_set[picks[k]],
                                    mix_seed(epoch_seed, static_cast<std::uint64_t>(k)),
                                    cfg.sample_rate, cfg.episode_limits);
    });

    EpochRecord rec;
    rec.epoch = epoch;
    std::vector<TrainTuple> batch;
    long long nodes = 0;
    bool breakdown = false;
    for (auto& ep : episodes) {
      if (!ep.ok) {
        ++rec.skipped;
        breakdown = breakdown || ep.error != "episode hit a solve limit";
        continue;
      }
      ++rec.episodes;
      nodes += ep.nodes;
      for (auto& t : ep.tuples) batch.push_back(std::move(t));
    }
    consecutive_failures = breakdown && rec.episodes == 0 ? consecutive_failures + 1 : 0;
    if (consecutive_failures >= 3) throw NumericalBreakdown("persistent LP breakdown during training");
    samples += nodes;
    rec.samples_cumulative = samples;
    rec.mean_episode_nodes = rec.episodes > 0 ? static_cast<double>(nodes) / rec.episodes : 0.0;
    rec.tuples = static_cast<int>(batch.size());
    if (!batch.empty()) {
      double baseline = 0.0;
      if (cfg.mean_baseline) {
        for (const auto& t : batch) baseline += t.ret;
        baseline /= static_cast<double>(batch.size());
      }
      const BatchLoss bl = batch_loss(res.params, batch, cfg.entropy_bonus, baseline);
      rec.loss = bl.loss;
      rec.entropy = bl.mean_entropy;
      res.params.add_scaled(bl.grad, -cfg.learning_rate);
      if (!res.params.all_finite()) throw NumericalBreakdown("policy parameters diverged");
    }
    if (epoch % cfg.eval_interval == 0 || epoch == cfg.epochs) run_validation(rec);
    rec.elapsed_seconds = elapsed();
    res.log.epochs.push_back(rec);
  }
  if (!validating) res.best_params = res.params;
  return res;
}

// ---------------------------------------------------------------------------
// Imitation of strong branching.

struct ImitationSample {
  std::vector<FeatureVector> features;
  int label = 0;
};

namespace detail {

/// Strong branching that also records (features, argmax) pairs.
class RecordingStrongRule final : public BranchingRule {
 public:
  explicit RecordingStrongRule(std::shared_ptr<std::vector<ImitationSample>> sink)
      : sink_(std::move(sink)) {}

  BranchDecision select(const BranchContext& ctx) override {
    if (ctx.candidates.size() == 1) return {0};
    const int best = best_scored(strong_branching_labels(ctx));
    sink_->push_back({*ctx.features, best});
    return {best};
  }
  [[nodiscard]] bool needs_features() const override { return true; }
  [[nodiscard]] std::string name() const override { return "strong-recording"; }
  [[nodiscard]] std::unique_ptr<BranchingRule> clone() const override {
    return std::make_unique<RecordingStrongRule>(*this);
  }

 private:
  std::shared_ptr<std::vector<ImitationSample>> sink_;
};

}  // namespace detail

/// Solves each instance with strong branching (best-first, at most
/// node_cap nodes) and keeps every decision with two or more candidates.
inline std::vector<ImitationSample> collect_strong_branching_samples(
    const std::vector<MilpInstance>& instances, long long node_cap, std::uint64_t seed) {
  std::vector<ImitationSample> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto sink = std::make_shared<std::vector<ImitationSample>>();
    SolveConfig cfg;
    cfg.rule = std::make_shared<detail::RecordingStrongRule>(sink);
    cfg.node_limit = node_cap;
    cfg.rng_seed = mix_seed(seed, i);
    solve(instances[i], cfg);
    for (auto& s : *sink) out.push_back(std::move(s));
  }
  return out;
}

/// Mean of -log pi(label) and its gradient.
inline ValueAndGrad cross_entropy(const PolicyParams& params,
                                  const std::vector<ImitationSample>& samples) {
  ValueAndGrad out{0.0, params.zeros_like()};
  if (samples.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) {
    out.value -= inv_n * accumulate_logprob_grad(params, s.features, s.label, -inv_n, out.grad);
  }
  return out;
}

inline double greedy_accuracy(const PolicyParams& params,
                              const std::vector<ImitationSample>& samples) {
  if (samples.empty()) return 0.0;
  int hit = 0;
  for (const auto& s : samples) hit += greedy_action(params, s.features) == s.label ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(samples.size());
}

struct ImitationConfig {
  long long node_cap_per_instance = 500;
  int epochs = 40;
  double learning_rate = 0.05;
  int batch = 32;
  std::uint64_t seed = 0;
  int hidden = kDefaultHidden;

  void validate() const {
    if (node_cap_per_instance < 1) throw InvalidConfig("node cap must be >= 1");
    if (epochs < 0) throw InvalidConfig("epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw InvalidConfig("learning rate must be > 0");
    if (batch < 1) throw InvalidConfig("batch size must be >= 1");
  }
};

struct ImitationRecord {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct ImitationResult {
  PolicyParams params;
  std::vector<ImitationRecord> log;
};

/// Minibatch gradient descent on the cross-entropy, reshuffled every epoch.
inline ImitationResult fit_imitation(PolicyParams params, const std::vector<ImitationSample>& data,
                                     const ImitationConfig& cfg) {
  cfg.validate();
  ImitationResult res{std::move(params), {}};
  if (data.empty()) return res;
  std::mt19937_64 rng(mix_seed(cfg.seed, 3));
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<ImitationSample> mb;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      mb.clear();
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      for (std::size_t k = start; k < end; ++k) mb.push_back(data[order[k]]);
      const ValueAndGrad ce = cross_entropy(res.params, mb);
      res.params.add_scaled(ce.grad, -cfg.learning_rate);
    }
    if (!res.params.all_finite()) throw NumericalBreakdown("imitation parameters diverged");
    res.log.push_back({epoch, cross_entropy(res.params, data).value, greedy_accuracy(res.params, data)});
  }
  return res;
}

inline ImitationResult train_imitation(const std::vector<MilpInstance>& train_set,
                                       const ImitationConfig& cfg) {
  cfg.validate();
  const auto data = collect_strong_branching_samples(train_set, cfg.node_cap_per_instance, cfg.seed);
  return fit_imitation(PolicyParams::random(mix_seed(cfg.seed, 1), cfg.hidden), data, cfg);
}

// ---------------------------------------------------------------------------

/// Optimal objective of every entry, solved once with the given rule
/// (best-first, no limits). Entries the solver proves infeasible keep no
/// optimum.
inline void presolve_optima(std::vector<DatasetEntry>& entries, const std::string& rule_spec,
                            int workers = 1) {
  const auto rule = make_rule(rule_spec);
  parallel_for(static_cast<int>(entries.size()), workers, [&](int i) {
    SolveConfig cfg;
    cfg.rule = rule;
    const SolveReport rep = solve(entries[i].instance, cfg);
    if (rep.status == SolveStatus::Optimal) entries[i].optimum = rep.obj;
  });
}

}  // namespace treebnb
