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

// Seeded generators for five benchmark families. Maximization models are
// stored as minimization of the negated objective.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "treebnb/common.hpp"
#include "treebnb/milp.hpp"

namespace treebnb {

enum class Family { CombAuction, SetCover, MaxIndepSet, FacilityLoc, MultiKnapsack };

inline constexpr Family kAllFamilies[] = {Family::CombAuction, Family::SetCover,
                                          Family::MaxIndepSet, Family::FacilityLoc,
                                          Family::MultiKnapsack};

inline const char* to_string(Family f) {
  switch (f) {
    case Family::CombAuction: return "cauctions";
    case Family::SetCover: return "setcover";
    case Family::MaxIndepSet: return "indset";
    case Family::FacilityLoc: return "facilities";
    case Family::MultiKnapsack: return "mknapsack";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  for (Family f : kAllFamilies) {
    if (s == to_string(f)) return f;
  }
  throw InvalidConfig("unknown family '" + s + "'");
}

/// Family-specific sizes:
///   CombAuction   (items, bids)
///   SetCover      (items, sets)
///   MaxIndepSet   (nodes, affinity)
///   FacilityLoc   (customers, facilities)
///   MultiKnapsack (items, knapsacks)
struct GenConfig {
  Family family = Family::SetCover;
  int size_a = 0;
  int size_b = 0;
  std::uint64_t seed = 0;
  double setcover_density = 0.05;

  void validate() const {
    if (size_a < 1 || size_b < 1) throw InvalidConfig("size parameters must be >= 1");
    if (family == Family::SetCover && size_b < 2) {
      throw InvalidConfig("set cover needs at least 2 sets");
    }
    if (family == Family::MaxIndepSet && size_a <= size_b) {
      throw InvalidConfig("independent set needs more nodes than the affinity");
    }
    if (setcover_density <= 0.0 || setcover_density > 1.0) {
      throw InvalidConfig("set cover density must lie in (0, 1]");
    }
  }
};

/// Desk-scale default sizes per family.
inline GenConfig default_config(Family f, std::uint64_t seed = 0) {
  switch (f) {
    case Family::CombAuction: return {f, 30, 150, seed};
    case Family::SetCover: return {f, 60, 120, seed};
    case Family::MaxIndepSet: return {f, 100, 4, seed};
    case Family::FacilityLoc: return {f, 12, 12, seed};
    case Family::MultiKnapsack: return {f, 16, 2, seed};
  }
  return {f, 1, 1, seed};
}

struct GeneratedInstance {
  MilpInstance instance;
  /// A feasible point known by construction.
  std::vector<double> witness;
};

namespace detail {

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline MilpInstance binary_instance(std::string name, std::vector<double> obj, int n_rows,
                                    std::vector<Triplet> entries, std::vector<double> rhs) {
  MilpInstance inst;
  inst.name = std::move(name);
  const int n = static_cast<int>(obj.size());
  inst.obj = std::move(obj);
  inst.rows = SparseMatrix::from_triplets(n_rows, n, std::move(entries));
  inst.rhs = std::move(rhs);
  inst.lower.assign(n, 0.0);
  inst.upper.assign(n, 1.0);
  inst.int_set.resize(n);
  std::iota(inst.int_set.begin(), inst.int_set.end(), 0);
  return inst;
}

inline std::string instance_name(const GenConfig& cfg, bool negated) {
  std::string s = std::string(to_string(cfg.family)) + "-" + std::to_string(cfg.size_a) + "x" +
                  std::to_string(cfg.size_b) + "-s" + std::to_string(cfg.seed);
  if (negated) s += " (max negated to min)";
  return s;
}

inline GeneratedInstance set_cover(const GenConfig& cfg, Rng& rng) {
  const int items = cfg.size_a;
  const int sets = cfg.size_b;
  std::vector<std::vector<char>> cover(items, std::vector<char>(sets, 0));
  std::bernoulli_distribution coin(cfg.setcover_density);
  for (int e = 0; e < items; ++e) {
    for (int s = 0; s < sets; ++s) cover[e][s] = coin(rng) ? 1 : 0;
  }
  // Every element lies in at least two sets.
  for (int e = 0; e < items; ++e) {
    int count = 0;
    for (int s = 0; s < sets; ++s) count += cover[e][s];
    while (count < 2) {
      const int s = uniform_int(rng, 0, sets - 1);
      if (!cover[e][s]) {
        cover[e][s] = 1;
        ++count;
      }
    }
  }
  // No empty columns.
  for (int s = 0; s < sets; ++s) {
    bool used = false;
    for (int e = 0; e < items && !used; ++e) used = cover[e][s];
    if (!used) cover[uniform_int(rng, 0, items - 1)][s] = 1;
  }
  std::vector<Triplet> entries;
  for (int e = 0; e < items; ++e) {
    for (int s = 0; s < sets; ++s) {
      if (cover[e][s]) entries.push_back({e, s, -1.0});
    }
  }
  GeneratedInstance g;
  g.instance = binary_instance(instance_name(cfg, false), std::vector<double>(sets, 1.0), items,
                               std::move(entries), std::vector<double>(items, -1.0));
  g.witness.assign(sets, 1.0);
  return g;
}

inline GeneratedInstance comb_auction(const GenConfig& cfg, Rng& rng) {
  const int items = cfg.size_a;
  const int bids = cfg.size_b;
  std::vector<double> base(items);
  for (auto& v : base) v = uniform_real(rng, 1.0, 100.0);
  std::binomial_distribution<int> extra(std::max(items - 1, 0),
                                        std::min(1.0, 3.0 / static_cast<double>(items)));
  std::vector<int> all(items);
  std::iota(all.begin(), all.end(), 0);

  std::vector<double> obj(bids);
  std::vector<Triplet> entries;
  for (int j = 0; j < bids; ++j) {
    const int size = std::min(items, 1 + extra(rng));
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<int> bundle(all.begin(), all.begin() + size);
    std::sort(bundle.begin(), bundle.end());
    double value = 0.0;
    for (int i : bundle) {
      value += base[i];
      entries.push_back({i, j, 1.0});
    }
    const double price = std::round(value * uniform_real(rng, 0.8, 1.5) * 100.0) / 100.0;
    obj[j] = -price;
  }
  GeneratedInstance g;
  g.instance = binary_instance(instance_name(cfg, true), std::move(obj), items,
                               std::move(entries), std::vector<double>(items, 1.0));
  g.witness.assign(bids, 0.0);
  return g;
}

/// Barabasi-Albert graph: `affinity` seed nodes, each later node attaches to
/// `affinity` distinct earlier nodes with probability proportional to degree.
inline std::vector<std::pair<int, int>> barabasi_albert(int nodes, int affinity, Rng& rng) {
  std::set<std::pair<int, int>> edges;
  std::vector<int> endpoint_pool;  // node repeated once per incident edge
  for (int v = affinity; v < nodes; ++v) {
    std::set<int> targets;
    if (v == affinity) {
      for (int u = 0; u < affinity; ++u) targets.insert(u);
    } else {
      while (static_cast<int>(targets.size()) < affinity) {
        const auto pick = std::uniform_int_distribution<std::size_t>(
            0, endpoint_pool.size() - 1)(rng);
        targets.insert(endpoint_pool[pick]);
      }
    }
    for (int u : targets) {
      edges.insert({std::min(u, v), std::max(u, v)});
      endpoint_pool.push_back(u);
      endpoint_pool.push_back(v);
    }
  }
  return {edges.begin(), edges.end()};
}

/// Greedy clique cover: each uncovered edge (in sorted order) is grown into a
/// maximal clique by adding, in ascending order, every vertex adjacent to all
/// current members.
inline std::vector<std::vector<int>> greedy_clique_cover(
    int nodes, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<char>> adj(nodes, std::vector<char>(nodes, 0));
  for (auto [u, v] : edges) adj[u][v] = adj[v][u] = 1;
  std::vector<std::vector<char>> covered(nodes, std::vector<char>(nodes, 0));
  std::vector<std::vector<int>> cliques;
  for (auto [u, v] : edges) {
    if (covered[u][v]) continue;
    std::vector<int> clique{u, v};
    for (int w = 0; w < nodes; ++w) {
      if (w == u || w == v) continue;
      bool ok = true;
      for (int c : clique) ok = ok && adj[w][c];
      if (ok) clique.push_back(w);
    }
    std::sort(clique.begin(), clique.end());
    for (std::size_t a = 0; a < clique.size(); ++a) {
      for (std::size_t b = a + 1; b < clique.size(); ++b) {
        covered[clique[a]][clique[b]] = covered[clique[b]][clique[a]] = 1;
      }
    }
    cliques.push_back(std::move(clique));
  }
  return cliques;
}

inline GeneratedInstance indep_set(const GenConfig& cfg, Rng& rng) {
  const int nodes = cfg.size_a;
  const auto edges = barabasi_albert(nodes, cfg.size_b, rng);
  const auto cliques = greedy_clique_cover(nodes, edges);
  std::vector<Triplet> entries;
  for (std::size_t r = 0; r < cliques.size(); ++r) {
    for (int v : cliques[r]) entries.push_back({static_cast<int>(r), v, 1.0});
  }
  const int m = static_cast<int>(cliques.size());
  GeneratedInstance g;
  g.instance = binary_instance(instance_name(cfg, true), std::vector<double>(nodes, -1.0), m,
                               std::move(entries), std::vector<double>(m, 1.0));
  g.witness.assign(nodes, 0.0);
  return g;
}

// Assigns customers (largest demand first) to the facility with the most
// remaining capacity. Returns the facility of each customer if all fit.
inline std::optional<std::vector<int>> pack_demands(const std::vector<int>& demand,
                                                    const std::vector<int>& capacity) {
  std::vector<int> order(demand.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return demand[a] > demand[b]; });
  std::vector<int> left = capacity;
  std::vector<int> where(demand.size(), -1);
  for (int j : order) {
    const auto it = std::max_element(left.begin(), left.end());
    if (*it < demand[j]) return std::nullopt;
    *it -= demand[j];
    where[j] = static_cast<int>(it - left.begin());
  }
  return where;
}

inline GeneratedInstance facility_location(const GenConfig& cfg, Rng& rng) {
  const int customers = cfg.size_a;
  const int facilities = cfg.size_b;
  std::vector<double> cx(customers), cy(customers), fx(facilities), fy(facilities);
  for (int j = 0; j < customers; ++j) {
    cx[j] = uniform_real(rng, 0.0, 1.0);
    cy[j] = uniform_real(rng, 0.0, 1.0);
  }
  for (int i = 0; i < facilities; ++i) {
    fx[i] = uniform_real(rng, 0.0, 1.0);
    fy[i] = uniform_real(rng, 0.0, 1.0);
  }
  std::vector<int> demand(customers), capacity(facilities), fixed_rand(facilities);
  for (auto& d : demand) d = uniform_int(rng, 5, 35);
  for (auto& s : capacity) s = uniform_int(rng, 10, 160);
  for (auto& f : fixed_rand) f = uniform_int(rng, 0, 90);

  const double total_demand = std::accumulate(demand.begin(), demand.end(), 0.0);
  const double total_cap = std::accumulate(capacity.begin(), capacity.end(), 0.0);
  if (total_cap < 1.2 * total_demand) {
    const double ratio = 1.2 * total_demand / total_cap;
    for (auto& s : capacity) s = static_cast<int>(std::ceil(s * ratio));
  }
  auto assignment = pack_demands(demand, capacity);
  while (!assignment) {
    for (auto& s : capacity) s = static_cast<int>(std::ceil(s * 1.1));
    assignment = pack_demands(demand, capacity);
  }

  const int n = facilities * customers + facilities;
  auto xvar = [&](int i, int j) { return i * customers + j; };
  auto yvar = [&](int i) { return facilities * customers + i; };
  std::vector<double> obj(n, 0.0);
  std::vector<Triplet> entries;
  for (int i = 0; i < facilities; ++i) {
    for (int j = 0; j < customers; ++j) {
      const double dist = std::hypot(fx[i] - cx[j], fy[i] - cy[j]);
      obj[xvar(i, j)] = std::round(10.0 * dist * demand[j]);
      entries.push_back({i, xvar(i, j), static_cast<double>(demand[j])});
    }
    obj[yvar(i)] = std::round(fixed_rand[i] + 100.0 * std::sqrt(static_cast<double>(capacity[i])));
    entries.push_back({i, yvar(i), -static_cast<double>(capacity[i])});
  }
  for (int j = 0; j < customers; ++j) {
    for (int i = 0; i < facilities; ++i) entries.push_back({facilities + j, xvar(i, j), -1.0});
  }
  std::vector<double> rhs(facilities + customers, 0.0);
  for (int j = 0; j < customers; ++j) rhs[facilities + j] = -1.0;

  GeneratedInstance g;
  g.instance = binary_instance(instance_name(cfg, false), std::move(obj), facilities + customers,
                               std::move(entries), std::move(rhs));
  g.witness.assign(n, 0.0);
  for (int i = 0; i < facilities; ++i) g.witness[yvar(i)] = 1.0;
  for (int j = 0; j < customers; ++j) g.witness[xvar((*assignment)[j], j)] = 1.0;
  return g;
}

inline GeneratedInstance multi_knapsack(const GenConfig& cfg, Rng& rng) {
  const int items = cfg.size_a;
  const int knapsacks = cfg.size_b;
  std::vector<int> weight(items), price(items);
  for (auto& w : weight) w = uniform_int(rng, 10, 1000);
  for (auto& p : price) p = uniform_int(rng, 10, 1000);
  const double total_w = std::accumulate(weight.begin(), weight.end(), 0.0);
  const double cap = std::floor(0.5 * total_w / knapsacks);

  const int n = items * knapsacks;
  auto var = [&](int i, int j) { return i * items + j; };
  std::vector<double> obj(n);
  std::vector<Triplet> entries;
  for (int i = 0; i < knapsacks; ++i) {
    for (int j = 0; j < items; ++j) {
      obj[var(i, j)] = -static_cast<double>(price[j]);
      entries.push_back({i, var(i, j), static_cast<double>(weight[j])});
      entries.push_back({knapsacks + j, var(i, j), 1.0});
    }
  }
  std::vector<double> rhs(knapsacks + items, 1.0);
  for (int i = 0; i < knapsacks; ++i) rhs[i] = cap;
  GeneratedInstance g;
  g.instance = binary_instance(instance_name(cfg, true), std::move(obj), knapsacks + items,
                               std::move(entries), std::move(rhs));
  g.witness.assign(n, 0.0);
  return g;
}

}  // namespace detail

inline GeneratedInstance generate_with_witness(const GenConfig& cfg) {
  cfg.validate();
  detail::Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(cfg.family)));
  switch (cfg.family) {
    case Family::CombAuction: return detail::comb_auction(cfg, rng);
    case Family::SetCover: return detail::set_cover(cfg, rng);
    case Family::MaxIndepSet: return detail::indep_set(cfg, rng);
    case Family::FacilityLoc: return detail::facility_location(cfg, rng);
    case Family::MultiKnapsack: return detail::multi_knapsack(cfg, rng);
  }
  throw InvalidConfig("unknown family");
}

inline MilpInstance generate(const GenConfig& cfg) { return generate_with_witness(cfg).instance; }

}  // namespace treebnb
