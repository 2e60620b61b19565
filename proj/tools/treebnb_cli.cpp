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

// treebnb command line: instance generation, solving, training and
// benchmarking. Every subcommand takes its randomness from --seed.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treebnb/bnb.hpp"
#include "treebnb/branching.hpp"
#include "treebnb/dataset.hpp"
#include "treebnb/evaluation.hpp"
#include "treebnb/instance_gen.hpp"
#include "treebnb/instance_io.hpp"
#include "treebnb/policy.hpp"
#include "treebnb/report_io.hpp"
#include "treebnb/trainer.hpp"
#include "treebnb/tree_mdp.hpp"

namespace fs = std::filesystem;
using namespace treebnb;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::optional<double> positive_or_none(double v) {
  if (v > 0.0) return v;
  return std::nullopt;
}

std::optional<long long> positive_or_none(long long v) {
  if (v > 0) return v;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string family = "setcover";
  int count = 10;
  int size_a = 0, size_b = 0;
  double density = 0.05;
  std::uint64_t seed = 0;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  const Family f = family_from_string(a.family);
  if (a.count < 1) throw InvalidConfig("--count must be >= 1");
  fs::create_directories(a.out);
  std::vector<DatasetEntry> entries;
  for (int i = 0; i < a.count; ++i) {
    GenConfig cfg = default_config(f, mix_seed(a.seed, static_cast<std::uint64_t>(i)));
    if (a.size_a > 0) cfg.size_a = a.size_a;
    if (a.size_b > 0) cfg.size_b = a.size_b;
    cfg.setcover_density = a.density;
    DatasetEntry e;
    e.instance = generate(cfg);
    char name[64];
    std::snprintf(name, sizeof name, "%s-%04d.json", to_string(f), i);
    e.file = name;
    e.family = to_string(f);
    e.seed = cfg.seed;
    write_instance(e.instance, (fs::path(a.out) / e.file).string());
    entries.push_back(std::move(e));
  }
  write_manifest(a.out, entries);
  std::printf("wrote %d %s instances to %s\n", a.count, to_string(f), a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string instance;
  std::string brancher = "pseudocost";
  std::string node_selection = "best-first";
  std::optional<double> objlim;
  long long node_limit = 0;
  double time_limit = 0.0;
  std::uint64_t seed = 0;
  bool features = false;
  std::string out;
};

int run_solve(const SolveArgs& a) {
  const MilpInstance inst = read_instance(a.instance);
  SolveConfig cfg;
  cfg.rule = make_rule(a.brancher);
  cfg.node_selection = node_selection_from_string(a.node_selection);
  cfg.objective_limit = a.objlim;
  cfg.node_limit = positive_or_none(a.node_limit);
  cfg.time_limit_seconds = positive_or_none(a.time_limit);
  cfg.rng_seed = a.seed;
  cfg.record_features = a.features;
  const SolveReport rep = solve(inst, cfg);
  const EpisodeTree episode = record_episode(rep);
  if (!a.out.empty()) write_report(rep, episode, a.out);
  std::printf("%s: %s obj %.10g glb %.10g nodes %lld time %.3f s\n", inst.name.c_str(),
              to_string(rep.status), rep.obj, rep.glb, rep.node_count, rep.wall_time);
  return 0;
}

// ---------------------------------------------------------------------------

struct PresolveArgs {
  std::string dir;
  std::string brancher = "strong";
};

int run_presolve(const PresolveArgs& a) {
  auto entries = load_dataset(a.dir);
  presolve_optima(entries, a.brancher, workers_from_env());
  int missing = 0;
  for (const auto& e : entries) {
    if (!e.optimum) {
      ++missing;
      std::fprintf(stderr, "warning: %s has no optimum (infeasible)\n", e.file.c_str());
    }
  }
  write_manifest(a.dir, entries);
  std::printf("optima for %zu of %zu instances written to %s\n", entries.size() - missing,
              entries.size(), (fs::path(a.dir) / kManifestName).string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string regime = "tmdp-objlim";
  std::string train_dir, valid_dir;
  int epochs = 100;
  double time_limit = 0.0;
  double entropy = 0.01;
  double lr = 0.03;
  double sample_rate = 0.2;
  int instances_per_epoch = 10;
  int eval_interval = 10;
  int hidden = kDefaultHidden;
  long long episode_node_limit = 20000;
  long long valid_node_limit = 20000;
  bool mean_baseline = false;
  std::string init;
  std::uint64_t seed = 0;
  std::string out;
  std::string log;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.regime = regime_from_string(a.regime);
  cfg.epochs = a.epochs;
  cfg.time_limit_seconds = positive_or_none(a.time_limit);
  cfg.entropy_bonus = a.entropy;
  cfg.learning_rate = a.lr;
  cfg.sample_rate = a.sample_rate;
  cfg.instances_per_epoch = a.instances_per_epoch;
  cfg.eval_interval = a.eval_interval;
  cfg.hidden = a.hidden;
  cfg.mean_baseline = a.mean_baseline;
  cfg.seed = a.seed;
  cfg.workers = workers_from_env();
  cfg.episode_limits.node_limit = positive_or_none(a.episode_node_limit);
  cfg.validation.node_limit = positive_or_none(a.valid_node_limit);
  cfg.validation.seed = mix_seed(a.seed, 101);
  cfg.validation.workers = cfg.workers;
  const auto train = load_dataset(a.train_dir);
  if (!a.valid_dir.empty()) cfg.validation_instances = instances_of(load_dataset(a.valid_dir));
  std::optional<PolicyParams> init;
  if (!a.init.empty()) init = load_policy(a.init);
  const TrainResult res = train_reinforce(train, cfg, init);
  for (const auto& e : res.log.epochs) {
    if (e.validation_gmean) {
      std::fprintf(stderr, "epoch %d samples %lld valid %.2f\n", e.epoch, e.samples_cumulative,
                   *e.validation_gmean);
    }
  }
  // best validated parameters when validation ran, else the last ones
  save_policy(cfg.validation_instances.empty() ? res.params : res.best_params, a.out);
  if (!a.log.empty()) write_text(a.log, res.log.to_csv());
  std::printf("trained %s for %zu epochs; policy written to %s\n", to_string(cfg.regime),
              res.log.epochs.empty() ? std::size_t{0} : res.log.epochs.size() - 1, a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct ImitateArgs {
  std::string train_dir;
  int epochs = 40;
  double lr = 0.05;
  int batch = 32;
  long long node_cap = 500;
  int hidden = kDefaultHidden;
  std::uint64_t seed = 0;
  std::string out;
  std::string log;
};

int run_imitate(const ImitateArgs& a) {
  ImitationConfig cfg;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.batch = a.batch;
  cfg.node_cap_per_instance = a.node_cap;
  cfg.hidden = a.hidden;
  cfg.seed = a.seed;
  const auto train = instances_of(load_dataset(a.train_dir));
  const ImitationResult res = train_imitation(train, cfg);
  save_policy(res.params, a.out);
  if (!a.log.empty()) {
    std::ostringstream os;
    os << "# treebnb-imitation v1\nepoch,loss,accuracy\n";
    for (const auto& r : res.log) os << r.epoch << ',' << r.loss << ',' << r.accuracy << '\n';
    write_text(a.log, os.str());
  }
  if (!res.log.empty()) {
    std::printf("imitation: loss %.4f accuracy %.3f; policy written to %s\n", res.log.back().loss,
                res.log.back().accuracy, a.out.c_str());
  } else {
    std::printf("imitation: no samples collected; policy written to %s\n", a.out.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string dir;
  std::vector<std::string> branchers{"random", "strong", "pseudocost"};
  int seeds = 5;
  double time_limit = 60.0;
  long long node_limit = 0;
  std::uint64_t seed = 0;
  std::string csv, summary, markdown, title;
};

int run_evaluate(const EvaluateArgs& a) {
  EvalOptions opt;
  opt.n_seeds = a.seeds;
  opt.time_limit_seconds = positive_or_none(a.time_limit);
  opt.node_limit = positive_or_none(a.node_limit);
  opt.workers = workers_from_env();
  opt.seed = a.seed;
  const auto instances = instances_of(load_dataset(a.dir));
  const EvalReport rep = evaluate(a.branchers, instances, opt);
  if (!a.csv.empty()) write_text(a.csv, eval_runs_csv(rep));
  if (!a.summary.empty()) write_text(a.summary, eval_summary_csv(rep));
  const std::string md = eval_markdown(rep, a.title);
  if (!a.markdown.empty()) write_text(a.markdown, md);
  std::printf("%s", md.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct GradientArgs {
  int max_depth = 4;
  int mdps_per_depth = 5;
  long long episodes = 200000;
  double tolerance = 0.05;
  std::uint64_t seed = 0;
};

// Compares both Monte-Carlo estimators with the exact gradient on random
// synthetic tree MDPs.
int run_validate_gradient(const GradientArgs& a) {
  if (a.max_depth < 1 || a.mdps_per_depth < 1 || a.episodes < 2) {
    throw InvalidConfig("need depth >= 1, at least one MDP and at least two episodes");
  }
  double worst_tree = 0.0, worst_temp = 0.0;
  for (int depth = 1; depth <= a.max_depth; ++depth) {
    for (int k = 0; k < a.mdps_per_depth; ++k) {
      const std::uint64_t s = mix_seed(a.seed, static_cast<std::uint64_t>(depth * 1000 + k));
      const auto mdp = random_tree_mdp({depth, 5, 3, 0.25, 0.2, -1.0, 1.0}, s);
      const auto params = PolicyParams::random(mix_seed(s, 1), 4);
      const auto exact = exact_value_and_gradient(mdp, params);
      std::mt19937_64 rng(mix_seed(s, 2));
      const auto [tree, temporal] = mc_gradient_estimates(mdp, params, a.episodes, rng);
      auto rel = [&](const McEstimate& est) {
        double num = 0.0, den = 0.0;
        for (std::size_t p = 0; p < params.size(); ++p) {
          const double d = est.mean.data[p] - exact.grad.data[p];
          num += d * d;
          den += exact.grad.data[p] * exact.grad.data[p];
        }
        return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
      };
      const double rt = rel(tree), rm = rel(temporal);
      worst_tree = std::max(worst_tree, rt);
      worst_temp = std::max(worst_temp, rm);
      std::printf("depth %d mdp %d: value %.4f rel. error tree %.4f temporal %.4f\n", depth, k,
                  exact.value, rt, rm);
    }
  }
  const bool pass = worst_tree <= a.tolerance && worst_temp <= a.tolerance;
  std::printf("%s worst rel. L2 error tree %.4f temporal %.4f (tolerance %.4f)\n",
              pass ? "PASS" : "FAIL", worst_tree, worst_temp, a.tolerance);
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct ReplayArgs {
  std::string report;
  std::string returns_csv;
};

int run_replay(const ReplayArgs& a) {
  const EpisodeTree tree = read_report_episode(a.report);
  const auto tr = tree_returns(tree);
  const auto te = temporal_returns(tree);
  int leaves = 0;
  double total = 0.0;
  for (const auto& v : tree.nodes) {
    leaves += v.leaf ? 1 : 0;
    total += v.reward;
  }
  std::printf("episode: %d nodes, %d decisions, %d leaves, %s\n", tree.size(),
              tree.size() - leaves, leaves, tree.complete ? "complete" : "incomplete");
  std::printf("total reward %.10g\n", total);
  if (!tr.empty()) {
    std::printf("root return: tree %.10g temporal %.10g\n", tr.front().value, te.front().value);
  }
  if (!a.returns_csv.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "# treebnb-returns v1\nnode,state_ref,action,tree_return,temporal_return\n";
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const auto& v = tree.nodes[tr[k].node];
      os << tr[k].node << ',' << v.state_ref << ',' << v.action << ',' << tr[k].value << ','
         << te[k].value << '\n';
    }
    write_text(a.returns_csv, os.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treebnb: branch-and-bound with learned branching policies"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a directory of random instances");
  g->add_option("--family", gen.family, "cauctions|setcover|indset|facilities|mknapsack")
      ->capture_default_str();
  g->add_option("--count", gen.count, "Number of instances")->capture_default_str();
  g->add_option("--size-a", gen.size_a, "First size parameter (0: family default)");
  g->add_option("--size-b", gen.size_b, "Second size parameter (0: family default)");
  g->add_option("--density", gen.density, "Set cover density")->capture_default_str();
  g->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "Solve one instance and write a JSON report");
  s->add_option("--instance", sol.instance, "Instance file")->required();
  s->add_option("--brancher", sol.brancher,
                "random|strong|pseudocost|policy:<path>|policy-greedy:<path>")
      ->capture_default_str();
  s->add_option("--node-selection", sol.node_selection, "best-first|dfs|dfs-right")
      ->capture_default_str();
  s->add_option("--objlim", sol.objlim, "Objective limit (initial upper bound)");
  s->add_option("--node-limit", sol.node_limit, "Node limit (0: none)");
  s->add_option("--time-limit", sol.time_limit, "Time limit in seconds (0: none)");
  s->add_option("--seed", sol.seed, "Seed")->capture_default_str();
  s->add_flag("--features", sol.features, "Store candidate features in the episode");
  s->add_option("--out", sol.out, "Report file");

  PresolveArgs pre;
  auto* p = app.add_subcommand("presolve-optima", "Store optimal values in a dataset manifest");
  p->add_option("--dir", pre.dir, "Instance directory")->required();
  p->add_option("--brancher", pre.brancher, "Rule used for the solves")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a policy with REINFORCE");
  t->add_option("--regime", tr.regime, "mdp|tmdp-dfs|tmdp-objlim")->capture_default_str();
  t->add_option("--train-dir", tr.train_dir, "Training instances")->required();
  t->add_option("--valid-dir", tr.valid_dir, "Validation instances");
  t->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
  t->add_option("--time-limit", tr.time_limit, "Wall-clock budget in seconds (0: none)");
  t->add_option("--entropy", tr.entropy, "Entropy bonus")->capture_default_str();
  t->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  t->add_option("--sample-rate", tr.sample_rate, "Fraction of tuples used per episode")
      ->capture_default_str();
  t->add_option("--instances-per-epoch", tr.instances_per_epoch, "Episodes per epoch")
      ->capture_default_str();
  t->add_option("--eval-interval", tr.eval_interval, "Epochs between validations")
      ->capture_default_str();
  t->add_option("--hidden", tr.hidden, "Hidden units")->capture_default_str();
  t->add_option("--episode-node-limit", tr.episode_node_limit, "Node limit per episode (0: none)")
      ->capture_default_str();
  t->add_option("--valid-node-limit", tr.valid_node_limit, "Node limit per validation solve")
      ->capture_default_str();
  t->add_flag("--mean-baseline", tr.mean_baseline, "Subtract the batch mean return");
  t->add_option("--init", tr.init, "Initial policy file");
  t->add_option("--seed", tr.seed, "Seed")->capture_default_str();
  t->add_option("--out", tr.out, "Policy file")->required();
  t->add_option("--log", tr.log, "Training log CSV");

  ImitateArgs im;
  auto* i = app.add_subcommand("imitate", "Fit a policy to strong branching decisions");
  i->add_option("--train-dir", im.train_dir, "Training instances")->required();
  i->add_option("--epochs", im.epochs, "Epochs")->capture_default_str();
  i->add_option("--lr", im.lr, "Learning rate")->capture_default_str();
  i->add_option("--batch", im.batch, "Minibatch size")->capture_default_str();
  i->add_option("--node-cap", im.node_cap, "Decisions recorded per instance")->capture_default_str();
  i->add_option("--hidden", im.hidden, "Hidden units")->capture_default_str();
  i->add_option("--seed", im.seed, "Seed")->capture_default_str();
  i->add_option("--out", im.out, "Policy file")->required();
  i->add_option("--log", im.log, "Loss log CSV");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Benchmark branching rules on a directory");
  e->add_option("--dir", ev.dir, "Instance directory")->required();
  e->add_option("--brancher", ev.branchers, "Rule to compare (repeatable)")->capture_default_str();
  e->add_option("--seeds", ev.seeds, "Seeds per instance")->capture_default_str();
  e->add_option("--time-limit", ev.time_limit, "Seconds per solve (0: none)")->capture_default_str();
  e->add_option("--node-limit", ev.node_limit, "Nodes per solve (0: none)");
  e->add_option("--seed", ev.seed, "Master seed")->capture_default_str();
  e->add_option("--csv", ev.csv, "Per-run CSV");
  e->add_option("--summary", ev.summary, "Aggregate CSV");
  e->add_option("--markdown", ev.markdown, "Markdown table");
  e->add_option("--title", ev.title, "Markdown table title");

  GradientArgs gr;
  auto* v = app.add_subcommand("validate-gradient",
                               "Check the policy-gradient estimators on synthetic tree MDPs");
  v->add_option("--max-depth", gr.max_depth, "Largest depth cap")->capture_default_str();
  v->add_option("--mdps-per-depth", gr.mdps_per_depth, "MDPs per depth")->capture_default_str();
  v->add_option("--episodes", gr.episodes, "Episodes per estimate")->capture_default_str();
  v->add_option("--tolerance", gr.tolerance, "Relative L2 tolerance")->capture_default_str();
  v->add_option("--seed", gr.seed, "Seed")->capture_default_str();

  ReplayArgs rp;
  auto* r = app.add_subcommand("replay-episode", "Validate a stored episode and recompute returns");
  r->add_option("--report", rp.report, "Report written by solve")->required();
  r->add_option("--returns-csv", rp.returns_csv, "Per-node returns CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return run_generate(gen);
    if (*s) return run_solve(sol);
    if (*p) return run_presolve(pre);
    if (*t) return run_train(tr);
    if (*i) return run_imitate(im);
    if (*e) return run_evaluate(ev);
    if (*v) return run_validate_gradient(gr);
    if (*r) return run_replay(rp);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
  return 1;
}
