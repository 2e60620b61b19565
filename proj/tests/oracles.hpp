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

// Independent reference computations used by the tests. Nothing here calls
// into the simplex or the branch-and-bound engine.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "treebnb/instance_gen.hpp"
#include "treebnb/lp_simplex.hpp"
#include "treebnb/milp.hpp"
#include "treebnb/policy.hpp"
#include "treebnb/tree_mdp.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

/// Solves the square system M y = r by Gaussian elimination with partial
/// pivoting. Empty result when singular.
inline std::optional<std::vector<double>> solve_square(Dense m, std::vector<double> r) {
  const int n = static_cast<int>(r.size());
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int i = c + 1; i < n; ++i) {
      if (std::abs(m[i][c]) > std::abs(m[p][c])) p = i;
    }
    if (std::abs(m[p][c]) < 1e-10) return std::nullopt;
    std::swap(m[p], m[c]);
    std::swap(r[p], r[c]);
    for (int i = 0; i < n; ++i) {
      if (i == c) continue;
      const double f = m[i][c] / m[c][c];
      for (int k = c; k < n; ++k) m[i][k] -= f * m[c][k];
      r[i] -= f * r[c];
    }
  }
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) y[i] = r[i] / m[i][i];
  return y;
}

/// min c'x over {Ax <= b, l <= x <= u} with finite bounds, by trying every
/// choice of n tight constraints. Empty result when infeasible.
inline std::optional<double> lp_by_vertex_enumeration(const Dense& a, const std::vector<double>& b,
                                                      const std::vector<double>& c,
                                                      const std::vector<double>& l,
                                                      const std::vector<double>& u) {
  const int n = static_cast<int>(c.size());
  Dense g = a;  // all constraints as g x <= h
  std::vector<double> h = b;
  for (int j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    g.push_back(e);
    h.push_back(u[j]);
    e[j] = -1.0;
    g.push_back(e);
    h.push_back(-l[j]);
  }
  const int total = static_cast<int>(g.size());
  std::optional<double> best;
  std::vector<int> pick(n);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Dense m;
      std::vector<double> r;
      for (int k : pick) {
        m.push_back(g[k]);
        r.push_back(h[k]);
      }
      const auto y = solve_square(m, r);
      if (!y) return;
      for (int i = 0; i < total; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += g[i][j] * (*y)[j];
        if (s > h[i] + 1e-9 * (1.0 + std::abs(h[i]))) return;
      }
      double z = 0.0;
      for (int j = 0; j < n; ++j) z += c[j] * (*y)[j];
      if (!best || z < *best) best = z;
      return;
    }
    for (int k = start; k < total; ++k) {
      pick[depth] = k;
      rec(k + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

inline Dense to_dense(const treebnb::SparseMatrix& s) {
  Dense d(s.n_rows, std::vector<double>(s.n_cols, 0.0));
  for (const auto& t : s.triplets()) d[t.row][t.col] = t.value;
  return d;
}

/// Central finite differences of f at p, every coordinate.
inline std::vector<double> fd_gradient(const treebnb::PolicyParams& p,
                                       const std::function<double(const treebnb::PolicyParams&)>& f,
                                       double h) {
  treebnb::PolicyParams q = p;
  std::vector<double> g(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double orig = q.data[k];
    q.data[k] = orig + h;
    const double up = f(q);
    q.data[k] = orig - h;
    const double down = f(q);
    q.data[k] = orig;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_k |a_k - b_k| / max(1, |b_k|): the relative mismatch used by all
/// gradient checks.
inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    worst = std::max(worst, std::abs(a[k] - b[k]) / std::max(1.0, std::abs(b[k])));
  }
  return worst;
}

/// Strict descendants of every node by explicit walks, O(n^2).
inline std::vector<double> naive_tree_returns(const treebnb::EpisodeTree& t) {
  const int n = t.size();
  std::vector<double> g(n, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int a = t.nodes[j].parent; a >= 0; a = t.nodes[a].parent) g[a] += t.nodes[j].reward;
  }
  return g;
}

/// Random binary tree with n_internal branchings and a random valid
/// (parent-first) processing order.
inline treebnb::EpisodeTree random_tree(int n_internal, std::mt19937_64& rng) {
  treebnb::EpisodeTree t;
  std::uniform_real_distribution<double> rew(-3.0, 1.0);
  t.nodes.push_back({});
  t.nodes[0].reward = rew(rng);
  std::vector<int> leaves{0};
  for (int k = 0; k < n_internal; ++k) {
    const int pick = std::uniform_int_distribution<int>(0, static_cast<int>(leaves.size()) - 1)(rng);
    const int v = leaves[pick];
    leaves.erase(leaves.begin() + pick);
    t.nodes[v].leaf = false;
    t.nodes[v].action = 0;
    for (int side = 0; side < 2; ++side) {
      treebnb::EpisodeNode c;
      c.parent = v;
      c.reward = rew(rng);
      t.nodes.push_back(c);
      const int id = static_cast<int>(t.nodes.size()) - 1;
      (side == 0 ? t.nodes[v].left_child : t.nodes[v].right_child) = id;
      leaves.push_back(id);
    }
  }
  // random topological order: repeatedly take a random available node
  std::vector<int> avail{0};
  while (!avail.empty()) {
    const int pick = std::uniform_int_distribution<int>(0, static_cast<int>(avail.size()) - 1)(rng);
    const int v = avail[pick];
    avail.erase(avail.begin() + pick);
    t.temporal_order.push_back(v);
    if (!t.nodes[v].leaf) {
      avail.push_back(t.nodes[v].left_child);
      avail.push_back(t.nodes[v].right_child);
    }
  }
  return t;
}

/// Figure-1 tree with r = -1 everywhere: a->(b,c), b->(d,e), c->(f,g),
/// f->(h,i); nodes a..i are indices 0..8, temporal order a,b,...,i.
inline treebnb::EpisodeTree figure_one_tree() {
  treebnb::EpisodeTree t;
  t.nodes.resize(9);
  for (auto& v : t.nodes) v.reward = -1.0;
  auto link = [&](int p, int l, int r) {
    t.nodes[p].leaf = false;
    t.nodes[p].action = 0;
    t.nodes[p].left_child = l;
    t.nodes[p].right_child = r;
    t.nodes[l].parent = p;
    t.nodes[r].parent = p;
  };
  link(0, 1, 2);
  link(1, 3, 4);
  link(2, 5, 6);
  link(5, 7, 8);
  t.temporal_order = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  return t;
}

/// Family sizes small enough for exhaustive enumeration (at most 2^14
/// binary assignments), varied a little by seed.
inline treebnb::GenConfig enumerable_config(treebnb::Family f, std::uint64_t seed) {
  using treebnb::Family;
  const int bump = static_cast<int>(seed % 3);
  switch (f) {
    case Family::CombAuction: return {f, 6, 10 + bump, seed};
    case Family::SetCover: return {f, 14, 10 + bump, seed, 0.3};
    case Family::MaxIndepSet: return {f, 12 + bump, 2, seed};
    case Family::FacilityLoc: return {f, 3, 3, seed};
    case Family::MultiKnapsack: return {f, 5 + bump, 2, seed};
  }
  return {f, 1, 1, seed};
}

}  // namespace oracle
