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

// Episodes as binary trees and the two ways of crediting rewards to actions.
//
// A tree episode has a state at every node and an action at every non-leaf
// node; each action produces exactly two child states. The tree return of a
// non-leaf node sums the rewards of its strict descendants. The temporal
// return sums the rewards of every node processed after it. Since children
// are always processed after their parent, the first set is contained in the
// second.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "treebnb/bnb.hpp"
#include "treebnb/common.hpp"
#include "treebnb/policy.hpp"

namespace treebnb {

struct EpisodeNode {
  int state_ref = -1;  // B&B node id, or synthetic state id
  int action = -1;     // chosen candidate index, -1 at leaves
  double reward = 0.0;
  bool leaf = true;
  int parent = -1;
  int left_child = -1;
  int right_child = -1;
  std::optional<BranchAction> branch;
  /// Candidate features at decision time (training snapshot).
  std::vector<FeatureVector> features;
};

struct EpisodeTree {
  std::vector<EpisodeNode> nodes;
  std::vector<int> temporal_order;
  bool complete = true;

  [[nodiscard]] int size() const { return static_cast<int>(nodes.size()); }

  /// Throws MalformedTree unless: node 0 is the root, leaves have no children
  /// and non-leaves have two, links are consistent, and temporal_order is a
  /// permutation with every parent before its children.
  void validate() const {
    const int n = size();
    if (n == 0) throw MalformedTree("empty episode");
    if (nodes[0].parent != -1) throw MalformedTree("node 0 must be the root");
    for (int i = 0; i < n; ++i) {
      const auto& v = nodes[i];
      if (i > 0 && (v.parent < 0 || v.parent >= n)) {
        throw MalformedTree("node " + std::to_string(i) + " has no valid parent");
      }
      if (v.leaf) {
        if (v.left_child != -1 || v.right_child != -1) {
          throw MalformedTree("leaf " + std::to_string(i) + " has children");
        }
        continue;
      }
      for (int c : {v.left_child, v.right_child}) {
        if (c <= 0 || c >= n || nodes[c].parent != i) {
          throw MalformedTree("non-leaf " + std::to_string(i) + " lacks a consistent child");
        }
      }
      if (v.left_child == v.right_child) throw MalformedTree("children must differ");
    }
    if (static_cast<int>(temporal_order.size()) != n) {
      throw MalformedTree("temporal order does not cover every node");
    }
    std::vector<int> pos(n, -1);
    for (int t = 0; t < n; ++t) {
      const int i = temporal_order[t];
      if (i < 0 || i >= n || pos[i] != -1) throw MalformedTree("temporal order is not a permutation");
      pos[i] = t;
    }
    for (int i = 1; i < n; ++i) {
      if (pos[nodes[i].parent] > pos[i]) {
        throw MalformedTree("node " + std::to_string(i) + " processed before its parent");
      }
    }
  }
};

struct NodeReturn {
  int node = -1;
  double value = 0.0;

  friend bool operator==(const NodeReturn&, const NodeReturn&) = default;
};

/// Tree returns G_i = sum of rewards over strict descendants of i, for every
/// non-leaf node in ascending index order. One bottom-up pass in reverse
/// temporal order. `ops`, if given, is incremented once per elementary step.
inline std::vector<NodeReturn> tree_returns(const EpisodeTree& tree, long long* ops = nullptr) {
  tree.validate();
  const int n = tree.size();
  std::vector<double> subtree(n);
  long long count = 0;
  for (int t = n - 1; t >= 0; --t) {
    const int i = tree.temporal_order[t];
    const auto& v = tree.nodes[i];
    double s = v.reward;
    ++count;
    if (!v.leaf) {
      s += subtree[v.left_child] + subtree[v.right_child];
      count += 2;
    }
    subtree[i] = s;
  }
  std::vector<NodeReturn> out;
  for (int i = 0; i < n; ++i) {
    ++count;
    if (!tree.nodes[i].leaf) out.push_back({i, subtree[i] - tree.nodes[i].reward});
  }
  if (ops) *ops += count;
  return out;
}

/// Temporal returns: for the node at temporal position t, the rewards of the
/// nodes at positions t+1 .. end.
inline std::vector<NodeReturn> temporal_returns(const EpisodeTree& tree) {
  tree.validate();
  const int n = tree.size();
  std::vector<double> after(n);
  double suffix = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const int i = tree.temporal_order[t];
    after[i] = suffix;
    suffix += tree.nodes[i].reward;
  }
  std::vector<NodeReturn> out;
  for (int i = 0; i < n; ++i) {
    if (!tree.nodes[i].leaf) out.push_back({i, after[i]});
  }
  return out;
}

/// Strict descendants of node i (reward indices credited by tree returns).
inline std::vector<int> tree_credit_set(const EpisodeTree& tree, int i) {
  std::vector<int> out, stack;
  const auto& root = tree.nodes[i];
  if (!root.leaf) stack = {root.left_child, root.right_child};
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    out.push_back(k);
    if (!tree.nodes[k].leaf) {
      stack.push_back(tree.nodes[k].left_child);
      stack.push_back(tree.nodes[k].right_child);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Nodes processed after node i (reward indices credited by temporal returns).
inline std::vector<int> temporal_credit_set(const EpisodeTree& tree, int i) {
  const auto it = std::find(tree.temporal_order.begin(), tree.temporal_order.end(), i);
  std::vector<int> out(it + 1, tree.temporal_order.end());
  std::sort(out.begin(), out.end());
  return out;
}

enum class RewardKind { TreeSize };

/// One episode node per processed B&B node, reward -1 each, temporal order
/// equal to the processing order. Aborted solves produce an episode flagged
/// incomplete: only processed nodes are kept.
inline EpisodeTree record_episode(const SolveReport& report,
                                  RewardKind kind = RewardKind::TreeSize) {
  (void)kind;
  EpisodeTree tree;
  tree.complete = report.complete();
  std::vector<int> remap(report.nodes.size(), -1);
  // Processed nodes in id order keep the root at index 0 and parents first.
  for (const auto& n : report.nodes) {
    if (!n.processed()) continue;
    remap[n.node_id] = static_cast<int>(tree.nodes.size());
    EpisodeNode e;
    e.state_ref = n.node_id;
    e.reward = -1.0;
    tree.nodes.push_back(std::move(e));
  }
  for (const auto& n : report.nodes) {
    const int i = remap[n.node_id];
    if (i < 0) continue;
    auto& e = tree.nodes[i];
    e.parent = n.parent_id >= 0 ? remap[n.parent_id] : -1;
    // in aborted solves a branched node may have unprocessed children; it
    // then stays a leaf of the episode
    if (n.status == NodeStatus::Branched && remap[n.left_child] >= 0 &&
        remap[n.right_child] >= 0) {
      e.leaf = false;
      e.branch = n.action;
      e.left_child = remap[n.left_child];
      e.right_child = remap[n.right_child];
      if (n.decision) {
        e.action = n.decision->chosen;
        e.features = n.decision->features;
      }
    }
  }
  tree.temporal_order.reserve(report.processed_order.size());
  for (int id : report.processed_order) tree.temporal_order.push_back(remap[id]);
  return tree;
}

// ---------------------------------------------------------------------------
// Synthetic finite tree MDPs with exactly computable values.

/// States are arranged in levels; children of a level-d state always live on
/// level d+1 and every state on the last level is a leaf, so episodes end
/// within `levels` steps of depth. All states share the same action count.
struct SyntheticTreeMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<int> level;
  std::vector<double> p_init;
  std::vector<double> p_left;   // [s][a][s']
  std::vector<double> p_right;  // [s][a][s']
  std::vector<double> reward;
  std::vector<char> leaf;
  /// Features of action a in state s, index s * n_actions + a.
  std::vector<FeatureVector> features;
  int depth_cap = 0;

  [[nodiscard]] double left(int s, int a, int t) const {
    return p_left[(static_cast<std::size_t>(s) * n_actions + a) * n_states + t];
  }
  [[nodiscard]] double right(int s, int a, int t) const {
    return p_right[(static_cast<std::size_t>(s) * n_actions + a) * n_states + t];
  }
  [[nodiscard]] std::span<const FeatureVector> action_features(int s) const {
    return {features.data() + static_cast<std::size_t>(s) * n_actions,
            static_cast<std::size_t>(n_actions)};
  }

  void validate() const {
    auto check_dist = [](std::span<const double> p, const char* what) {
      double sum = 0.0;
      for (double v : p) {
        if (v < 0.0) throw InvalidConfig(std::string(what) + ": negative probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw InvalidConfig(std::string(what) + ": does not sum to 1");
    };
    check_dist(p_init, "p_init");
    for (int s = 0; s < n_states; ++s) {
      if (level[s] >= depth_cap && !leaf[s]) {
        throw DepthCapExceeded("non-leaf state " + std::to_string(s) + " at the depth cap");
      }
      if (leaf[s]) continue;
      for (int a = 0; a < n_actions; ++a) {
        const std::size_t off = (static_cast<std::size_t>(s) * n_actions + a) * n_states;
        check_dist({p_left.data() + off, static_cast<std::size_t>(n_states)}, "p_left");
        check_dist({p_right.data() + off, static_cast<std::size_t>(n_states)}, "p_right");
        for (int t = 0; t < n_states; ++t) {
          if ((left(s, a, t) > 0.0 || right(s, a, t) > 0.0) && level[t] <= level[s]) {
            throw DepthCapExceeded("transition does not descend a level");
          }
        }
      }
    }
  }
};

struct SyntheticMdpShape {
  int levels = 3;            // depth cap; states on the last level are leaves
  int states_per_level = 2;
  int actions = 2;
  double leaf_probability = 0.2;  // for states above the last level (not level 0)
  /// Dirichlet concentration of every transition distribution; small values
  /// make the actions' child distributions more distinct.
  double concentration = 1.0;
  double min_reward = -2.0;  // state rewards are uniform in [min_reward, max_reward]
  double max_reward = 0.0;
};

/// Random stochastic tree MDP with random rewards and features.
inline SyntheticTreeMdp random_tree_mdp(const SyntheticMdpShape& shape, std::uint64_t seed) {
  if (shape.levels < 1 || shape.states_per_level < 1 || shape.actions < 1) {
    throw InvalidConfig("synthetic MDP sizes must be positive");
  }
  if (!(shape.concentration > 0.0)) throw InvalidConfig("concentration must be positive");
  if (!(shape.min_reward <= shape.max_reward)) throw InvalidConfig("empty reward range");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticTreeMdp mdp;
  const int per = shape.states_per_level;
  mdp.n_states = (shape.levels + 1) * per;
  mdp.n_actions = shape.actions;
  mdp.depth_cap = shape.levels;
  mdp.level.resize(mdp.n_states);
  mdp.reward.resize(mdp.n_states);
  mdp.leaf.resize(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    mdp.level[s] = s / per;
    mdp.reward[s] = shape.min_reward + (shape.max_reward - shape.min_reward) * unit(rng);
    mdp.leaf[s] = mdp.level[s] == shape.levels ||
                  (mdp.level[s] > 0 && unit(rng) < shape.leaf_probability);
  }
  mdp.p_init.assign(mdp.n_states, 0.0);
  std::gamma_distribution<double> gamma(shape.concentration, 1.0);
  auto random_dist = [&](double* out, int first) {
    // Dirichlet draw, floored so every listed child stays reachable
    double sum = 0.0;
    for (int k = 0; k < per; ++k) sum += (out[first + k] = 1e-3 + gamma(rng));
    for (int k = 0; k < per; ++k) out[first + k] /= sum;
  };
  random_dist(mdp.p_init.data(), 0);
  const std::size_t table = static_cast<std::size_t>(mdp.n_states) * mdp.n_actions * mdp.n_states;
  mdp.p_left.assign(table, 0.0);
  mdp.p_right.assign(table, 0.0);
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.leaf[s]) continue;
    const int next = (mdp.level[s] + 1) * per;
    for (int a = 0; a < mdp.n_actions; ++a) {
      const std::size_t off = (static_cast<std::size_t>(s) * mdp.n_actions + a) * mdp.n_states;
      random_dist(mdp.p_left.data() + off, next);
      random_dist(mdp.p_right.data() + off, next);
    }
  }
  mdp.features.resize(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions);
  for (auto& f : mdp.features) {
    for (auto& v : f) v = 2.0 * unit(rng) - 1.0;
  }
  mdp.validate();
  return mdp;
}

/// Per-state policy probabilities pi(.|s) for every non-leaf state.
inline std::vector<std::vector<double>> state_policies(const SyntheticTreeMdp& mdp,
                                                       const PolicyParams& params) {
  std::vector<std::vector<double>> pi(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    if (!mdp.leaf[s]) pi[s] = policy_forward(params, mdp.action_features(s)).probs;
  }
  return pi;
}

/// Exact V^pi by the recursion V(s) = r(s) at leaves and
/// V(s) = r(s) + sum_a pi(a|s) E[V(S-) + V(S+)] otherwise, then averaged
/// over p_init.
inline double exact_value(const SyntheticTreeMdp& mdp, const PolicyParams& params) {
  const auto pi = state_policies(mdp, params);
  std::vector<int> order(mdp.n_states);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return mdp.level[a] > mdp.level[b]; });
  std::vector<double> v(mdp.n_states, 0.0);
  for (int s : order) {
    double val = mdp.reward[s];
    if (!mdp.leaf[s]) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        double child = 0.0;
        for (int t = 0; t < mdp.n_states; ++t) {
          const double p = mdp.left(s, a, t) + mdp.right(s, a, t);
          if (p > 0.0) child += p * v[t];
        }
        val += pi[s][a] * child;
      }
    }
    v[s] = val;
  }
  double total = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) total += mdp.p_init[s] * v[s];
  return total;
}

/// V^pi and its gradient by central finite differences on the exact value.
inline ValueAndGrad exact_value_and_gradient(const SyntheticTreeMdp& mdp,
                                             const PolicyParams& params, double h = 1e-6) {
  mdp.validate();
  ValueAndGrad out{exact_value(mdp, params), params.zeros_like()};
  PolicyParams p = params;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double orig = p.data[k];
    p.data[k] = orig + h;
    const double up = exact_value(mdp, p);
    p.data[k] = orig - h;
    const double down = exact_value(mdp, p);
    p.data[k] = orig;
    out.grad.data[k] = (up - down) / (2.0 * h);
  }
  return out;
}

/// Samples one episode; nodes are generated (and temporally ordered)
/// depth-first, left child first.
template <class Rng>
EpisodeTree sample_synthetic_episode(const SyntheticTreeMdp& mdp,
                                     const std::vector<std::vector<double>>& pi, Rng& rng) {
  EpisodeTree tree;
  auto draw = [&](auto&& prob_of) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double cum = 0.0;
    int last = -1;
    for (int t = 0; t < mdp.n_states; ++t) {
      const double p = prob_of(t);
      if (p <= 0.0) continue;
      last = t;
      cum += p;
      if (u < cum) return t;
    }
    return last;
  };
  auto add = [&](int state, int parent) {
    EpisodeNode e;
    e.state_ref = state;
    e.reward = mdp.reward[state];
    e.leaf = mdp.leaf[state] != 0;
    e.parent = parent;
    tree.nodes.push_back(e);
    return static_cast<int>(tree.nodes.size()) - 1;
  };
  const int root = add(draw([&](int t) { return mdp.p_init[t]; }), -1);
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    tree.temporal_order.push_back(i);
    if (tree.nodes[i].leaf) continue;
    const int s = tree.nodes[i].state_ref;
    const int a = sample_index(pi[s], rng);
    const int sl = draw([&](int t) { return mdp.left(s, a, t); });
    const int sr = draw([&](int t) { return mdp.right(s, a, t); });
    const int l = add(sl, i);
    const int r = add(sr, i);
    tree.nodes[i].action = a;
    tree.nodes[i].left_child = l;
    tree.nodes[i].right_child = r;
    stack.push_back(r);
    stack.push_back(l);
  }
  return tree;
}

enum class GradientEstimator { TreePG, TemporalPG };

struct McEstimate {
  PolicyGradient mean;
  PolicyGradient std_error;  // per component, of the mean
  long long episodes = 0;
};

/// Monte-Carlo policy gradients sum_i grad log pi(a_i|s_i) * G_i averaged over
/// episodes, for both estimators from the same sampled episodes.
template <class Rng>
std::pair<McEstimate, McEstimate> mc_gradient_estimates(const SyntheticTreeMdp& mdp,
                                                        const PolicyParams& params,
                                                        long long n_episodes, Rng& rng) {
  const auto pi = state_policies(mdp, params);
  const std::size_t np = params.size();
  // grad log pi(a|s) depends only on (s, a): compute each once.
  std::vector<std::vector<double>> score(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.leaf[s]) continue;
    for (int a = 0; a < mdp.n_actions; ++a) {
      score[static_cast<std::size_t>(s) * mdp.n_actions + a] =
          logprob_grad(params, mdp.action_features(s), a).grad.data;
    }
  }
  std::vector<double> sum_tree(np, 0.0), sq_tree(np, 0.0), sum_temp(np, 0.0), sq_temp(np, 0.0);
  std::vector<double> g_tree(np), g_temp(np);
  for (long long e = 0; e < n_episodes; ++e) {
    const EpisodeTree tree = sample_synthetic_episode(mdp, pi, rng);
    std::fill(g_tree.begin(), g_tree.end(), 0.0);
    std::fill(g_temp.begin(), g_temp.end(), 0.0);
    const auto tr = tree_returns(tree);
    const auto te = temporal_returns(tree);
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const auto& node = tree.nodes[tr[k].node];
      const auto& sc = score[static_cast<std::size_t>(node.state_ref) * mdp.n_actions + node.action];
      const double gt = tr[k].value, gm = te[k].value;
      for (std::size_t p = 0; p < np; ++p) {
        g_tree[p] += gt * sc[p];
        g_temp[p] += gm * sc[p];
      }
    }
    for (std::size_t p = 0; p < np; ++p) {
      sum_tree[p] += g_tree[p];
      sq_tree[p] += g_tree[p] * g_tree[p];
      sum_temp[p] += g_temp[p];
      sq_temp[p] += g_temp[p] * g_temp[p];
    }
  }
  auto finish = [&](const std::vector<double>& sum, const std::vector<double>& sq) {
    McEstimate est{params.zeros_like(), params.zeros_like(), n_episodes};
    const double n = static_cast<double>(n_episodes);
    for (std::size_t p = 0; p < np; ++p) {
      const double mean = sum[p] / n;
      const double var = n > 1 ? std::max(0.0, (sq[p] - n * mean * mean) / (n - 1)) : 0.0;
      est.mean.data[p] = mean;
      est.std_error.data[p] = std::sqrt(var / n);
    }
    return est;
  };
  return {finish(sum_tree, sq_tree), finish(sum_temp, sq_temp)};
}

template <class Rng>
McEstimate mc_gradient_estimate(const SyntheticTreeMdp& mdp, const PolicyParams& params,
                                GradientEstimator estimator, long long n_episodes, Rng& rng) {
  auto both = mc_gradient_estimates(mdp, params, n_episodes, rng);
  return estimator == GradientEstimator::TreePG ? std::move(both.first) : std::move(both.second);
}

/// Tree MDP whose every episode has the shape
///   a -> (b, c), b -> (d, e), c -> (f, g), f -> (h, i).
/// Each position has a "good" (reward -1) and "bad" (reward -2) state; action
/// 0 makes good children likely, action 1 bad ones.
inline SyntheticTreeMdp figure_one_mdp(std::uint64_t feature_seed = 7) {
  // positions a..i = 0..8; children of each internal position
  const int kids[9][2] = {{1, 2}, {3, 4}, {5, 6}, {-1, -1}, {-1, -1},
                          {7, 8}, {-1, -1}, {-1, -1}, {-1, -1}};
  const int depth[9] = {0, 1, 1, 2, 2, 2, 2, 3, 3};
  SyntheticTreeMdp mdp;
  mdp.n_states = 18;  // state = 2 * position + bad
  mdp.n_actions = 2;
  mdp.depth_cap = 3;
  mdp.level.resize(18);
  mdp.reward.resize(18);
  mdp.leaf.resize(18);
  for (int s = 0; s < 18; ++s) {
    const int pos = s / 2;
    mdp.level[s] = depth[pos];
    mdp.reward[s] = (s % 2) ? -2.0 : -1.0;
    mdp.leaf[s] = kids[pos][0] < 0;
  }
  mdp.p_init.assign(18, 0.0);
  mdp.p_init[0] = 1.0;
  const std::size_t table = 18 * 2 * 18;
  mdp.p_left.assign(table, 0.0);
  mdp.p_right.assign(table, 0.0);
  for (int s = 0; s < 18; ++s) {
    if (mdp.leaf[s]) continue;
    const int pos = s / 2;
    for (int a = 0; a < 2; ++a) {
      const double good = a == 0 ? 0.7 : 0.3;
      const std::size_t off = (static_cast<std::size_t>(s) * 2 + a) * 18;
      mdp.p_left[off + 2 * kids[pos][0]] = good;
      mdp.p_left[off + 2 * kids[pos][0] + 1] = 1.0 - good;
      mdp.p_right[off + 2 * kids[pos][1]] = good;
      mdp.p_right[off + 2 * kids[pos][1] + 1] = 1.0 - good;
    }
  }
  std::mt19937_64 rng(feature_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  mdp.features.resize(36);
  for (auto& f : mdp.features) {
    for (auto& v : f) v = unit(rng);
  }
  mdp.validate();
  return mdp;
}

}  // namespace treebnb
