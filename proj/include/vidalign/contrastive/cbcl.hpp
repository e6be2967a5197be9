// Copyright 2026 The vidalign Authors
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

// Cross-frame box-assisted contrastive learning. Anchor and reference
// features of a batch are stacked into one 2N batch; every foreground channel
// pattern acts once as a query, with another random foreground pattern as its
// positive and every background pattern of the batch as negatives.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "vidalign/alignment/pattern.hpp"
#include "vidalign/core/log.hpp"

namespace vidalign::contrastive {

using alignment::BinaryMask;
using alignment::ChannelPattern;

struct ContrastiveConfig {
  double temperature = 0.07;
  double weight = 0.3;
};

template <typename T>
struct PatternEntry {
  int sample = 0;  // index into the concatenated 2N batch
  ChannelPattern<T> pattern;
};

template <typename T>
struct PatternBank {
  std::vector<PatternEntry<T>> foreground;
  std::vector<PatternEntry<T>> background;
};

/// Query, positive and negatives as indices into a PatternBank.
struct ContrastTuple {
  int query = 0;                 // foreground index
  int positive = 0;              // foreground index, never == query
  std::vector<int> negatives;    // background indices
};

/// Stack anchors then references along the batch axis.
template <typename T>
std::pair<Tensor<T>, std::vector<BinaryMask>> concat_cross_frame(const Tensor<T>& f_a, const Tensor<T>& f_r,
                                                                 std::span<const BinaryMask> m_a,
                                                                 std::span<const BinaryMask> m_r) {
  f_a.require_same_shape(f_r, "concat_cross_frame");
  if (static_cast<int>(m_a.size()) != f_a.n() || static_cast<int>(m_r.size()) != f_r.n())
    throw ShapeError("concat_cross_frame: one mask per sample required");
  const std::array<Tensor<T>, 2> parts{f_a, f_r};
  Tensor<T> stacked = concat_batch<T>(parts);
  std::vector<BinaryMask> masks(m_a.begin(), m_a.end());
  masks.insert(masks.end(), m_r.begin(), m_r.end());
  return {std::move(stacked), std::move(masks)};
}

template <typename T>
PatternBank<T> extract_pattern_bank(const Tensor<T>& stacked, std::span<const BinaryMask> masks) {
  if (static_cast<int>(masks.size()) != stacked.n()) throw ShapeError("extract_pattern_bank: mask count mismatch");
  PatternBank<T> bank;
  for (int n = 0; n < stacked.n(); ++n) {
    const auto& m = masks[n];
    if (m.count(1) > 0)
      bank.foreground.push_back({n, alignment::normalize_pattern(alignment::masked_channel_pool(stacked, n, m, 1))});
    if (m.count(0) > 0)
      bank.background.push_back({n, alignment::normalize_pattern(alignment::masked_channel_pool(stacked, n, m, 0))});
  }
  return bank;
}

template <typename T, typename Rng>
std::vector<ContrastTuple> sample_pairs(const PatternBank<T>& bank, Rng& rng) {
  const int nf = static_cast<int>(bank.foreground.size());
  const int nb = static_cast<int>(bank.background.size());
  if (nf < 2 || nb == 0) {
    log::debug("sample_pairs: need >= 2 foreground and >= 1 background patterns; contrastive term is 0");
    return {};
  }
  std::vector<int> negatives(nb);
  for (int i = 0; i < nb; ++i) negatives[i] = i;
  std::vector<ContrastTuple> tuples;
  tuples.reserve(nf);
  for (int q = 0; q < nf; ++q) {
    std::uniform_int_distribution<int> pick(0, nf - 2);
    int p = pick(rng);
    if (p >= q) ++p;
    tuples.push_back({q, p, negatives});
  }
  return tuples;
}

namespace detail {

template <typename T>
std::pair<std::vector<T>, T> l2_normalize(const std::vector<T>& v) {
  T norm = T(0);
  for (T x : v) norm += x * x;
  norm = std::sqrt(norm);
  std::vector<T> u(v.size(), T(0));
  if (norm > T(0))
    for (std::size_t i = 0; i < v.size(); ++i) u[i] = v[i] / norm;
  return {std::move(u), norm};
}

/// Gradient through u = v / |v| given u, |v| and dL/du.
template <typename T>
std::vector<T> l2_normalize_backward(const std::vector<T>& u, T norm, const std::vector<T>& gu) {
  std::vector<T> gv(u.size(), T(0));
  if (!(norm > T(0))) return gv;
  T proj = T(0);
  for (std::size_t i = 0; i < u.size(); ++i) proj += u[i] * gu[i];
  for (std::size_t i = 0; i < u.size(); ++i) gv[i] = (gu[i] - u[i] * proj) / norm;
  return gv;
}

}  // namespace detail

template <typename T>
struct InfoNceResult {
  T loss = T(0);
  std::vector<T> grad_query;
  std::vector<T> grad_positive;
  std::vector<std::vector<T>> grad_negatives;
};

/// -log softmax of the positive logit among {positive, negatives}, on
/// L2-normalized patterns at temperature tau.
template <typename T>
InfoNceResult<T> info_nce_with_grad(const std::vector<T>& query, const std::vector<T>& positive,
                                    std::span<const std::vector<T>> negatives, T tau) {
  if (negatives.empty()) throw ValueError("info_nce: at least one negative is required");
  if (!(tau > T(0))) throw ValueError("info_nce: temperature must be positive");
  const auto [q, nq] = detail::l2_normalize(query);
  const auto [p, np] = detail::l2_normalize(positive);
  const std::size_t K = negatives.size();
  std::vector<std::vector<T>> u(K);
  std::vector<T> nu(K);
  for (std::size_t i = 0; i < K; ++i) std::tie(u[i], nu[i]) = detail::l2_normalize(negatives[i]);

  auto dot = [](const std::vector<T>& a, const std::vector<T>& b) {
    T s = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  std::vector<T> logits(K + 1);
  logits[0] = dot(q, p) / tau;
  for (std::size_t i = 0; i < K; ++i) logits[i + 1] = dot(q, u[i]) / tau;
  const T mx = *std::max_element(logits.begin(), logits.end());
  T denom = T(0);
  for (T l : logits) denom += std::exp(l - mx);
  InfoNceResult<T> r;
  r.loss = std::log(denom) + mx - logits[0];

  // dL/dlogit_i = softmax_i - [i == 0]
  std::vector<T> gl(K + 1);
  for (std::size_t i = 0; i <= K; ++i) gl[i] = std::exp(logits[i] - mx) / denom;
  gl[0] -= T(1);

  std::vector<T> gq(q.size(), T(0)), gp(q.size(), T(0));
  for (std::size_t c = 0; c < q.size(); ++c) {
    gq[c] += gl[0] * p[c] / tau;
    gp[c] = gl[0] * q[c] / tau;
  }
  r.grad_negatives.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    std::vector<T> gu(q.size());
    for (std::size_t c = 0; c < q.size(); ++c) {
      gq[c] += gl[i + 1] * u[i][c] / tau;
      gu[c] = gl[i + 1] * q[c] / tau;
    }
    r.grad_negatives[i] = detail::l2_normalize_backward(u[i], nu[i], gu);
  }
  r.grad_query = detail::l2_normalize_backward(q, nq, gq);
  r.grad_positive = detail::l2_normalize_backward(p, np, gp);
  return r;
}

template <typename T>
T info_nce(const std::vector<T>& query, const std::vector<T>& positive, std::span<const std::vector<T>> negatives,
           T tau) {
  return info_nce_with_grad(query, positive, negatives, tau).loss;
}

template <typename T>
struct ContrastiveLossResult {
  T loss = T(0);
  std::vector<std::vector<T>> grad_foreground;  // per bank entry, w.r.t. the [0,1] pattern
  std::vector<std::vector<T>> grad_background;
};

/// Mean InfoNCE over tuples; zero for an empty tuple list.
template <typename T>
ContrastiveLossResult<T> contrastive_loss_with_grad(const PatternBank<T>& bank, std::span<const ContrastTuple> tuples,
                                                    T tau) {
  ContrastiveLossResult<T> r;
  r.grad_foreground.assign(bank.foreground.size(), {});
  r.grad_background.assign(bank.background.size(), {});
  for (std::size_t i = 0; i < bank.foreground.size(); ++i)
    r.grad_foreground[i].assign(bank.foreground[i].pattern.size(), T(0));
  for (std::size_t i = 0; i < bank.background.size(); ++i)
    r.grad_background[i].assign(bank.background[i].pattern.size(), T(0));
  if (tuples.empty()) return r;

  const T scale = T(1) / static_cast<T>(tuples.size());
  for (const auto& t : tuples) {
    std::vector<std::vector<T>> negs;
    negs.reserve(t.negatives.size());
    for (int b : t.negatives) negs.push_back(bank.background[b].pattern.values);
    auto one = info_nce_with_grad(bank.foreground[t.query].pattern.values, bank.foreground[t.positive].pattern.values,
                                  std::span<const std::vector<T>>(negs), tau);
    r.loss += one.loss * scale;
    for (std::size_t c = 0; c < one.grad_query.size(); ++c) {
      r.grad_foreground[t.query][c] += one.grad_query[c] * scale;
      r.grad_foreground[t.positive][c] += one.grad_positive[c] * scale;
    }
    for (std::size_t k = 0; k < t.negatives.size(); ++k)
      for (std::size_t c = 0; c < one.grad_negatives[k].size(); ++c)
        r.grad_background[t.negatives[k]][c] += one.grad_negatives[k][c] * scale;
  }
  return r;
}

/// Mean of precomputed per-tuple losses.
template <typename T>
T contrastive_loss(std::span<const T> per_tuple) {
  if (per_tuple.empty()) return T(0);
  T s = T(0);
  for (T v : per_tuple) s += v;
  return s / static_cast<T>(per_tuple.size());
}

template <typename T>
struct CbclResult {
  T loss = T(0);
  int tuples = 0;
  Tensor<T> grad_anchor;     // d loss / d F_a
  Tensor<T> grad_reference;  // d loss / d F_r
};

/// Full contrastive branch on intermediate features of a batch of pairs.
template <typename T, typename Rng>
CbclResult<T> cbcl_forward_backward(const Tensor<T>& f_a, const Tensor<T>& f_r, std::span<const BinaryMask> m_a,
                                    std::span<const BinaryMask> m_r, T tau, Rng& rng) {
  auto [stacked, masks] = concat_cross_frame(f_a, f_r, m_a, m_r);
  const PatternBank<T> bank = extract_pattern_bank(stacked, std::span<const BinaryMask>(masks));
  const auto tuples = sample_pairs(bank, rng);
  const auto res = contrastive_loss_with_grad(bank, std::span<const ContrastTuple>(tuples), tau);

  Tensor<T> g(stacked.n(), stacked.c(), stacked.h(), stacked.w());
  if (!tuples.empty()) {
    for (std::size_t i = 0; i < bank.foreground.size(); ++i) {
      const auto& e = bank.foreground[i];
      alignment::masked_channel_pool_backward(alignment::normalize_pattern_backward(e.pattern, res.grad_foreground[i]),
                                              masks[e.sample], 1, g, e.sample);
    }
    for (std::size_t i = 0; i < bank.background.size(); ++i) {
      const auto& e = bank.background[i];
      alignment::masked_channel_pool_backward(alignment::normalize_pattern_backward(e.pattern, res.grad_background[i]),
                                              masks[e.sample], 0, g, e.sample);
    }
  }
  CbclResult<T> out;
  out.loss = res.loss;
  out.tuples = static_cast<int>(tuples.size());
  const int N = f_a.n();
  out.grad_anchor = Tensor<T>(N, f_a.c(), f_a.h(), f_a.w());
  out.grad_reference = Tensor<T>(N, f_a.c(), f_a.h(), f_a.w());
  for (int n = 0; n < N; ++n) {
    out.grad_anchor.set_sample(n, g.slice(n));
    out.grad_reference.set_sample(n, g.slice(N + n));
  }
  return out;
}

}  // namespace vidalign::contrastive
