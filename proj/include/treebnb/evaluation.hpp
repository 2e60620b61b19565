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

// Benchmark harness: every (instance, seed, method) is solved once and the
// aggregates only use (instance, seed) pairs that every method finished.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "treebnb/bnb.hpp"
#include "treebnb/branching.hpp"
#include "treebnb/common.hpp"
#include "treebnb/milp.hpp"

namespace treebnb {

/// Runs body(0..n-1) on up to `workers` threads. Exceptions are rethrown
/// (the first one) after all threads join.
template <class Body>
void parallel_for(int n, int workers, Body&& body) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Worker count from TREEBNB_WORKERS, default 1.
inline int workers_from_env() {
  const char* v = std::getenv("TREEBNB_WORKERS");
  if (!v) return 1;
  const int n = std::atoi(v);
  return n > 0 ? n : 1;
}

/// Geometric mean of positive values, no shift. NaN for an empty input.
inline double geometric_mean(const std::vector<double>& values) {
  if (values.empty()) return std::nan("");
  double s = 0.0;
  for (double v : values) s += std::log(v);
  return std::exp(s / static_cast<double>(values.size()));
}

/// Population standard deviation as a percentage of the mean.
inline double std_percent(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return 100.0 * std::sqrt(var) / mean;
}

/// Output label for a rule spec. The pseudocost rule is not SCIP's default
/// brancher and is labelled accordingly.
inline std::string method_label(const std::string& spec) {
  if (spec == "pseudocost") return "pseudocost (reliability)";
  return spec;
}

struct EvalRun {
  int instance = 0;
  int seed = 0;
  int method = 0;
  long long node_count = 0;
  double wall_time = 0.0;
  SolveStatus status = SolveStatus::Optimal;

  [[nodiscard]] bool finished() const {
    return status != SolveStatus::NodeLimit && status != SolveStatus::TimeLimit;
  }
};

struct MethodAggregate {
  std::string label;
  double gmean_nodes = 0.0;
  double gmean_time = 0.0;
  double std_percent = 0.0;  // mean over instances of per-instance std%
  int timeouts = 0;
  int pairs = 0;             // (instance, seed) pairs used in the aggregates
};

struct EvalReport {
  std::vector<std::string> methods;    // labels
  std::vector<std::string> instances;  // names
  int n_seeds = 0;
  std::vector<EvalRun> runs;

  [[nodiscard]] const EvalRun* find(int instance, int seed, int method) const {
    for (const auto& r : runs) {
      if (r.instance == instance && r.seed == seed && r.method == method) return &r;
    }
    return nullptr;
  }

  /// mask[instance][seed]: every method has a finished run for the pair.
  [[nodiscard]] std::vector<std::vector<char>> complete_mask() const {
    const int ni = static_cast<int>(instances.size());
    std::vector<std::vector<int>> done(ni, std::vector<int>(n_seeds, 0));
    for (const auto& r : runs) {
      if (r.finished()) ++done[r.instance][r.seed];
    }
    std::vector<std::vector<char>> mask(ni, std::vector<char>(n_seeds, 0));
    for (int i = 0; i < ni; ++i) {
      for (int s = 0; s < n_seeds; ++s) {
        mask[i][s] = done[i][s] == static_cast<int>(methods.size());
      }
    }
    return mask;
  }

  [[nodiscard]] std::vector<MethodAggregate> aggregates() const {
    const auto mask = complete_mask();
    const int nm = static_cast<int>(methods.size());
    const int ni = static_cast<int>(instances.size());
    std::vector<MethodAggregate> out(nm);
    std::vector<std::vector<double>> nodes(nm), times(nm);
    std::vector<std::vector<std::vector<double>>> per_instance(
        nm, std::vector<std::vector<double>>(ni));
    for (int m = 0; m < nm; ++m) out[m].label = methods[m];
    for (const auto& r : runs) {
      if (!r.finished()) ++out[r.method].timeouts;
      if (!mask[r.instance][r.seed]) continue;
      nodes[r.method].push_back(static_cast<double>(std::max(1LL, r.node_count)));
      times[r.method].push_back(std::max(r.wall_time, 1e-9));
      per_instance[r.method][r.instance].push_back(static_cast<double>(r.node_count));
    }
    for (int m = 0; m < nm; ++m) {
      out[m].pairs = static_cast<int>(nodes[m].size());
      out[m].gmean_nodes = geometric_mean(nodes[m]);
      out[m].gmean_time = geometric_mean(times[m]);
      double sum = 0.0;
      int count = 0;
      for (const auto& v : per_instance[m]) {
        if (v.empty()) continue;
        sum += treebnb::std_percent(v);
        ++count;
      }
      out[m].std_percent = count > 0 ? sum / count : 0.0;
    }
    return out;
  }
};

// CSV, version 1. Header line then one row per run:
//   instance,seed,method,node_count,wall_time,status
inline constexpr const char* kEvalCsvHeader =
    "# treebnb-eval v1\ninstance,seed,method,node_count,wall_time,status\n";

inline std::string eval_runs_csv(const EvalReport& rep) {
  std::ostringstream os;
  os << kEvalCsvHeader;
  for (const auto& r : rep.runs) {
    os << rep.instances[r.instance] << ',' << r.seed << ',' << rep.methods[r.method] << ','
       << r.node_count << ',' << r.wall_time << ',' << to_string(r.status) << '\n';
  }
  return os.str();
}

// Aggregates CSV, version 1:
//   method,gmean_nodes,std_percent,gmean_time,timeouts,pairs
inline std::string eval_summary_csv(const EvalReport& rep) {
  std::ostringstream os;
  os << "# treebnb-eval-summary v1\nmethod,gmean_nodes,std_percent,gmean_time,timeouts,pairs\n";
  for (const auto& a : rep.aggregates()) {
    os << a.label << ',' << a.gmean_nodes << ',' << a.std_percent << ',' << a.gmean_time << ','
       << a.timeouts << ',' << a.pairs << '\n';
  }
  return os.str();
}

inline std::string eval_markdown(const EvalReport& rep, const std::string& title = "") {
  std::ostringstream os;
  if (!title.empty()) os << "### " << title << "\n\n";
  os << "| Method | Nodes (geo. mean) | Std % | Time s (geo. mean) | Timeouts |\n";
  os << "|---|---:|---:|---:|---:|\n";
  char buf[256];
  for (const auto& a : rep.aggregates()) {
    std::snprintf(buf, sizeof buf, "| %s | %.1f | %.0f | %.3f | %d |\n", a.label.c_str(),
                  a.gmean_nodes, a.std_percent, a.gmean_time, a.timeouts);
    os << buf;
  }
  return os.str();
}

struct EvalOptions {
  int n_seeds = 5;
  std::optional<double> time_limit_seconds = 60.0;
  std::optional<long long> node_limit;
  int workers = 1;
  std::uint64_t seed = 0;  // master seed
};

/// Solves every (instance, seed, method) with best-first node selection and
/// no objective limit.
inline EvalReport evaluate_rules(const std::vector<std::shared_ptr<const BranchingRule>>& rules,
                                 const std::vector<std::string>& labels,
                                 const std::vector<MilpInstance>& instances,
                                 const EvalOptions& opt) {
  if (instances.empty()) throw InvalidConfig("no instances to evaluate");
  if (rules.empty()) throw InvalidConfig("no methods to evaluate");
  if (labels.size() != rules.size()) throw DimensionMismatch("one label per method");
  if (opt.n_seeds < 1) throw InvalidConfig("n_seeds must be positive");
  EvalReport rep;
  rep.methods = labels;
  for (const auto& inst : instances) rep.instances.push_back(inst.name);
  rep.n_seeds = opt.n_seeds;
  const int nm = static_cast<int>(rules.size());
  const int ni = static_cast<int>(instances.size());
  const int total = ni * opt.n_seeds * nm;
  rep.runs.resize(total);
  parallel_for(total, opt.workers, [&](int k) {
    const int m = k % nm;
    const int s = (k / nm) % opt.n_seeds;
    const int i = k / (nm * opt.n_seeds);
    SolveConfig cfg;
    cfg.rule = rules[m];
    cfg.rng_seed = mix_seed(opt.seed, static_cast<std::uint64_t>(i) * 1000 + s);
    cfg.time_limit_seconds = opt.time_limit_seconds;
    cfg.node_limit = opt.node_limit;
    const SolveReport sr = solve(instances[i], cfg);
    rep.runs[k] = EvalRun{i, s, m, sr.node_count, sr.wall_time, sr.status};
  });
  return rep;
}

inline EvalReport evaluate(const std::vector<std::string>& rule_specs,
                           const std::vector<MilpInstance>& instances, const EvalOptions& opt) {
  std::vector<std::shared_ptr<const BranchingRule>> rules;
  std::vector<std::string> labels;
  for (const auto& spec : rule_specs) {
    rules.push_back(make_rule(spec));
    labels.push_back(method_label(spec));
  }
  return evaluate_rules(rules, labels, instances, opt);
}

}  // namespace treebnb
