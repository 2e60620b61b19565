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

// Stochastic branching policy over a variable-size candidate set.
//
// Each candidate j is scored independently by a one-hidden-layer network,
//
//   logit_j = w2 . tanh(W1' phi_j + b1) + b2,
//
// and the policy is the softmax of the logits over the candidates present.
// Gradients of log pi(a|s) and of the entropy are computed analytically.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "treebnb/common.hpp"

namespace treebnb {

inline constexpr int kNumFeatures = 12;
using FeatureVector = std::array<double, kNumFeatures>;

inline constexpr int kDefaultHidden = 32;

/// Flat parameter vector [W1 (F x H, row-major by feature) | b1 | w2 | b2].
/// Gradients share the same layout.
struct PolicyParams {
  int n_features = kNumFeatures;
  int hidden = kDefaultHidden;
  std::vector<double> data;

  PolicyParams() : data(size_for(kNumFeatures, kDefaultHidden), 0.0) {}
  PolicyParams(int features, int hidden_units)
      : n_features(features), hidden(hidden_units), data(size_for(features, hidden_units), 0.0) {}

  static std::size_t size_for(int f, int h) {
    return static_cast<std::size_t>(f) * h + 2 * static_cast<std::size_t>(h) + 1;
  }

  /// Uniform in [-1/sqrt(F), 1/sqrt(F)].
  static PolicyParams random(std::uint64_t seed, int hidden_units = kDefaultHidden,
                             int features = kNumFeatures) {
    PolicyParams p(features, hidden_units);
    std::mt19937_64 rng(seed);
    const double r = 1.0 / std::sqrt(static_cast<double>(features));
    std::uniform_real_distribution<double> dist(-r, r);
    for (auto& v : p.data) v = dist(rng);
    return p;
  }

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] std::size_t b1_offset() const { return static_cast<std::size_t>(n_features) * hidden; }
  [[nodiscard]] std::size_t w2_offset() const { return b1_offset() + hidden; }
  [[nodiscard]] std::size_t b2_offset() const { return w2_offset() + hidden; }

  [[nodiscard]] double w1(int f, int h) const { return data[static_cast<std::size_t>(f) * hidden + h]; }
  [[nodiscard]] double b1(int h) const { return data[b1_offset() + h]; }
  [[nodiscard]] double w2(int h) const { return data[w2_offset() + h]; }
  [[nodiscard]] double b2() const { return data[b2_offset()]; }

  [[nodiscard]] bool same_shape(const PolicyParams& o) const {
    return n_features == o.n_features && hidden == o.hidden;
  }

  [[nodiscard]] PolicyParams zeros_like() const { return PolicyParams(n_features, hidden); }

  PolicyParams& add_scaled(const PolicyParams& o, double s) {
    if (!same_shape(o)) throw DimensionMismatch("policy parameter shapes differ");
    for (std::size_t k = 0; k < data.size(); ++k) data[k] += s * o.data[k];
    return *this;
  }

  [[nodiscard]] double norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
  }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

using PolicyGradient = PolicyParams;

struct PolicyOutput {
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> log_probs;
  std::vector<double> hidden;  // k x H activations, kept for backprop
};

inline PolicyOutput policy_forward(const PolicyParams& p, std::span<const FeatureVector> feats) {
  if (p.n_features != kNumFeatures) throw DimensionMismatch("policy expects 12 features");
  const int k = static_cast<int>(feats.size());
  const int hsz = p.hidden;
  PolicyOutput out;
  out.logits.resize(k);
  out.hidden.resize(static_cast<std::size_t>(k) * hsz);
  for (int j = 0; j < k; ++j) {
    double* h = &out.hidden[static_cast<std::size_t>(j) * hsz];
    for (int u = 0; u < hsz; ++u) h[u] = p.b1(u);
    for (int f = 0; f < kNumFeatures; ++f) {
      const double x = feats[j][f];
      if (x == 0.0) continue;
      const double* row = &p.data[static_cast<std::size_t>(f) * hsz];
      for (int u = 0; u < hsz; ++u) h[u] += x * row[u];
    }
    double s = p.b2();
    for (int u = 0; u < hsz; ++u) {
      h[u] = std::tanh(h[u]);
      s += p.w2(u) * h[u];
    }
    out.logits[j] = s;
  }
  const double mx = k > 0 ? *std::max_element(out.logits.begin(), out.logits.end()) : 0.0;
  double sum = 0.0;
  for (double s : out.logits) sum += std::exp(s - mx);
  const double lse = mx + std::log(sum);
  out.probs.resize(k);
  out.log_probs.resize(k);
  for (int j = 0; j < k; ++j) {
    out.log_probs[j] = out.logits[j] - lse;
    out.probs[j] = std::exp(out.log_probs[j]);
  }
  return out;
}

/// Adds scale * sum_j coeff[j] * d logit_j / d theta into `grad`.
inline void backprop_logits(const PolicyParams& p, std::span<const FeatureVector> feats,
                            const PolicyOutput& fwd, std::span<const double> coeff, double scale,
                            PolicyGradient& grad) {
  const int hsz = p.hidden;
  for (std::size_t j = 0; j < feats.size(); ++j) {
    const double c = scale * coeff[j];
    if (c == 0.0) continue;
    const double* h = &fwd.hidden[j * hsz];
    grad.data[p.b2_offset()] += c;
    for (int u = 0; u < hsz; ++u) {
      grad.data[p.w2_offset() + u] += c * h[u];
      const double dz = c * p.w2(u) * (1.0 - h[u] * h[u]);
      if (dz == 0.0) continue;
      grad.data[p.b1_offset() + u] += dz;
      for (int f = 0; f < kNumFeatures; ++f) {
        const double x = feats[j][f];
        if (x != 0.0) grad.data[static_cast<std::size_t>(f) * hsz + u] += dz * x;
      }
    }
  }
}

struct ValueAndGrad {
  double value = 0.0;
  PolicyGradient grad;
};

/// log pi(chosen | feats) and its gradient, accumulated into `grad` with `scale`.
inline double accumulate_logprob_grad(const PolicyParams& p, std::span<const FeatureVector> feats,
                                      int chosen, double scale, PolicyGradient& grad,
                                      const PolicyOutput* cached = nullptr) {
  const PolicyOutput fwd = cached ? *cached : policy_forward(p, feats);
  std::vector<double> coeff(fwd.probs.size());
  for (std::size_t j = 0; j < coeff.size(); ++j) {
    coeff[j] = (static_cast<int>(j) == chosen ? 1.0 : 0.0) - fwd.probs[j];
  }
  backprop_logits(p, feats, fwd, coeff, scale, grad);
  return fwd.log_probs[chosen];
}

inline ValueAndGrad logprob_grad(const PolicyParams& p, std::span<const FeatureVector> feats,
                                 int chosen) {
  if (chosen < 0 || chosen >= static_cast<int>(feats.size())) {
    throw DimensionMismatch("chosen index out of range");
  }
  ValueAndGrad out{0.0, p.zeros_like()};
  out.value = accumulate_logprob_grad(p, feats, chosen, 1.0, out.grad);
  return out;
}

inline double entropy_of(const PolicyOutput& fwd) {
  double h = 0.0;
  for (std::size_t j = 0; j < fwd.probs.size(); ++j) h -= fwd.probs[j] * fwd.log_probs[j];
  return h;
}

/// H(pi(.|feats)) and its gradient, accumulated into `grad` with `scale`.
inline double accumulate_entropy_grad(const PolicyParams& p, std::span<const FeatureVector> feats,
                                      double scale, PolicyGradient& grad,
                                      const PolicyOutput* cached = nullptr) {
  const PolicyOutput fwd = cached ? *cached : policy_forward(p, feats);
  const double h = entropy_of(fwd);
  std::vector<double> coeff(fwd.probs.size());
  // dH/dlogit_j = -p_j (log p_j + H)
  for (std::size_t j = 0; j < coeff.size(); ++j) {
    coeff[j] = -fwd.probs[j] * (fwd.log_probs[j] + h);
  }
  backprop_logits(p, feats, fwd, coeff, scale, grad);
  return h;
}

inline ValueAndGrad entropy_grad(const PolicyParams& p, std::span<const FeatureVector> feats) {
  ValueAndGrad out{0.0, p.zeros_like()};
  out.value = accumulate_entropy_grad(p, feats, 1.0, out.grad);
  return out;
}

/// Inverse-CDF draw over `probs` in candidate order.
template <class Rng>
int sample_index(std::span<const double> probs, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cum = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    cum += probs[j];
    if (u < cum) return static_cast<int>(j);
  }
  for (std::size_t j = probs.size(); j-- > 0;) {
    if (probs[j] > 0.0) return static_cast<int>(j);
  }
  return 0;
}

template <class Rng>
int sample_action(const PolicyParams& p, std::span<const FeatureVector> feats, Rng& rng) {
  const auto fwd = policy_forward(p, feats);
  return sample_index(fwd.probs, rng);
}

/// Argmax, lowest index on ties.
inline int argmax_index(std::span<const double> values) {
  int best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = static_cast<int>(j);
  }
  return best;
}

inline int greedy_action(const PolicyParams& p, std::span<const FeatureVector> feats) {
  return argmax_index(policy_forward(p, feats).logits);
}

// Policy file, version 1 (whitespace separated text):
//   treebnb-policy 1
//   features <F> hidden <H>
//   params <count>
//   <count numbers, full precision>
inline constexpr int kPolicyFormatVersion = 1;

inline std::string policy_to_string(const PolicyParams& p) {
  std::ostringstream os;
  os << "treebnb-policy " << kPolicyFormatVersion << "\n";
  os << "features " << p.n_features << " hidden " << p.hidden << "\n";
  os << "params " << p.size() << "\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < p.size(); ++k) {
    os << p.data[k] << ((k + 1) % 8 == 0 || k + 1 == p.size() ? "\n" : " ");
  }
  return os.str();
}

inline PolicyParams policy_from_string(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "treebnb-policy") {
    throw ParseError("not a policy file (missing 'treebnb-policy' header)");
  }
  if (version != kPolicyFormatVersion) {
    throw VersionMismatch("unsupported policy format version " + std::to_string(version));
  }
  std::string kf, kh, kp;
  int f = 0, h = 0;
  std::size_t count = 0;
  if (!(is >> kf >> f >> kh >> h) || kf != "features" || kh != "hidden" || f != kNumFeatures ||
      h < 1) {
    throw ParseError("bad policy dimensions line");
  }
  if (!(is >> kp >> count) || kp != "params" || count != PolicyParams::size_for(f, h)) {
    throw ParseError("bad policy parameter count");
  }
  PolicyParams p(f, h);
  for (std::size_t k = 0; k < count; ++k) {
    std::string tok;
    if (!(is >> tok)) throw ParseError("policy file truncated at parameter " + std::to_string(k));
    try {
      std::size_t used = 0;
      p.data[k] = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError("policy parameter " + std::to_string(k) + " is not a number: '" + tok + "'");
    }
  }
  std::string extra;
  if (is >> extra) throw ParseError("trailing data after policy parameters");
  if (!p.all_finite()) throw ParseError("policy parameters must be finite");
  return p;
}

inline void save_policy(const PolicyParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << policy_to_string(p);
  if (!out) throw Error("failed writing " + path);
}

inline PolicyParams load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open policy file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_from_string(ss.str());
}

}  // namespace treebnb
