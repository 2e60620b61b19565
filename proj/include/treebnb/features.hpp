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
#include <vector>

#include "treebnb/bnb_types.hpp"

namespace treebnb {

enum FeatureIndex : int {
  kFracPart = 0,
  kFractionality,
  kObjCoef,
  kPositionInDomain,
  kDomainWidth,
  kDepth,
  kParticipation,
  kMeanAbsCoef,
  kPseudocostUp,
  kPseudocostDown,
  kTimesBranched,
  kGubFinite,
};

namespace detail {

inline double width_ratio(double local, double root) {
  if (!std::isfinite(root)) return std::isfinite(local) ? 0.0 : 1.0;
  return local / (1.0 + root);
}

}  // namespace detail

/// One feature vector per candidate, in candidate order. Only depends on the
/// candidate itself and node-level data, so permuting candidates permutes
/// the output.
inline std::vector<FeatureVector> featurize(const BranchContext& ctx) {
  const auto& inst = ctx.instance;
  const auto& st = ctx.stats;
  const double obj_scale = 1.0 + st.max_abs_obj;
  const int m = inst.n_rows();
  const int depth = ctx.node.depth;

  std::vector<FeatureVector> out;
  out.reserve(ctx.candidates.size());
  for (const auto& cand : ctx.candidates) {
    const int j = cand.var;
    const double x = cand.value;
    const double lo = ctx.lower[j];
    const double up = ctx.upper[j];
    FeatureVector f{};
    const double frac = x - std::floor(x);
    f[kFracPart] = frac;
    f[kFractionality] = 2.0 * std::min(frac, 1.0 - frac);
    f[kObjCoef] = inst.obj[j] / obj_scale;
    f[kPositionInDomain] = (std::isfinite(lo) && std::isfinite(up))
                               ? std::clamp((x - lo) / (1.0 + up - lo), 0.0, 1.0)
                               : 0.5;
    f[kDomainWidth] = detail::width_ratio(up - lo, inst.upper[j] - inst.lower[j]);
    f[kDepth] = std::min(1.0, depth / (1.0 + inst.n_vars()));
    f[kParticipation] = m > 0 ? static_cast<double>(st.col_count[j]) / m : 0.0;
    f[kMeanAbsCoef] = st.max_abs_coef > 0.0 ? st.col_mean_abs[j] / st.max_abs_coef : 0.0;
    f[kPseudocostUp] = ctx.pseudocosts.estimate(j, true) / obj_scale;
    f[kPseudocostDown] = ctx.pseudocosts.estimate(j, false) / obj_scale;
    int times = 0;
    for (const auto& bc : ctx.node.bound_changes) times += bc.var == j ? 1 : 0;
    f[kTimesBranched] = times / (1.0 + depth);
    f[kGubFinite] = std::isfinite(ctx.gub) ? 1.0 : 0.0;
    out.push_back(f);
  }
  return out;
}

}  // namespace treebnb
