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

// Foreground temporal alignment: the anchor feature is re-weighted channel by
// channel with the reference frame's foreground channel pattern,
//
//   F~(c, x, y) = alpha * f_r(c) * F_a(c, x, y) + F_a(c, x, y),
//
// where f_r is the min-max normalized masked mean of the reference feature and
// alpha = exp(cos(f_r, f_a)) measures how well the anchor agrees with it.
// Both patterns are pooled under the reference mask.

#include <cmath>
#include <span>
#include <vector>

#include "vidalign/alignment/pattern.hpp"
#include "vidalign/core/log.hpp"

namespace vidalign::alignment {

inline constexpr double kDefaultConfidenceThreshold = 0.6;

template <typename T>
struct AdaptiveWeight {
  T alpha = T(1);
  T cosine = T(0);
  bool degenerate = false;  // a zero-norm pattern; cosine taken as 0
};

template <typename T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  T s = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
AdaptiveWeight<T> similarity_weight(const std::vector<T>& f_r, const std::vector<T>& f_a) {
  if (f_r.size() != f_a.size()) throw ShapeError("similarity_weight: pattern lengths differ");
  const T nr = std::sqrt(dot(f_r, f_r)), na = std::sqrt(dot(f_a, f_a));
  AdaptiveWeight<T> w;
  if (!(nr > T(0)) || !(na > T(0))) {
    w.degenerate = true;
    log::debug("similarity_weight: zero-norm channel pattern, using alpha = 1");
    return w;
  }
  w.cosine = std::clamp(dot(f_r, f_a) / (nr * na), T(-1), T(1));
  w.alpha = std::exp(w.cosine);
  return w;
}

template <typename T>
AdaptiveWeight<T> similarity_weight(const ChannelPattern<T>& f_r, const ChannelPattern<T>& f_a) {
  return similarity_weight(f_r.values, f_a.values);
}

/// Gradients of alpha with respect to both patterns, scaled by `grad_alpha`.
template <typename T>
void similarity_weight_backward(const std::vector<T>& f_r, const std::vector<T>& f_a, const AdaptiveWeight<T>& w,
                                T grad_alpha, std::vector<T>& grad_r, std::vector<T>& grad_a) {
  grad_r.assign(f_r.size(), T(0));
  grad_a.assign(f_a.size(), T(0));
  if (w.degenerate) return;
  const T nr = std::sqrt(dot(f_r, f_r)), na = std::sqrt(dot(f_a, f_a));
  const T gcos = grad_alpha * w.alpha;
  for (std::size_t i = 0; i < f_r.size(); ++i) {
    grad_r[i] = gcos * (f_a[i] / (nr * na) - w.cosine * f_r[i] / (nr * nr));
    grad_a[i] = gcos * (f_r[i] / (nr * na) - w.cosine * f_a[i] / (na * na));
  }
}

/// Channel attention with skip connection on sample `n` of `f_a`. The channel
/// vector is broadcast to every spatial position.
template <typename T>
Tensor<T> fta_fuse(const Tensor<T>& f_a, int n, const std::vector<T>& f_r, T alpha) {
  if (static_cast<int>(f_r.size()) != f_a.c()) throw ShapeError("fta_fuse: channel count mismatch");
  Tensor<T> out = f_a.slice(n);
  for (int c = 0; c < f_a.c(); ++c) {
    const T scale = alpha * f_r[c];
    for (auto& v : out.plane(0, c)) v = scale * v + v;
  }
  return out;
}

/// Gate mask for the anchor's reference. Inference passes the previous frame's
/// detections (only scores strictly above `threshold` count); training passes
/// reference ground truth with score 1.
inline BinaryMask fta_gate(std::span<const Detection> reference, double threshold, const Grid& grid,
                           MaskSource source = MaskSource::detected) {
  if (threshold < 0.0 || threshold > 1.0) throw ValueError("fta_gate: threshold outside [0,1]");
  std::vector<Box> validated;
  for (const auto& d : reference)
    if (d.score > threshold) validated.push_back(d.box());
  return rasterize_boxes(std::span<const Box>(validated), grid, source);
}

/// Per-sample state kept for the backward pass.
template <typename T>
struct FtaSampleTrace {
  bool applied = false;
  std::vector<T> raw_r, raw_a;
  ChannelPattern<T> f_r, f_a;
  AdaptiveWeight<T> weight;
};

template <typename T>
struct FtaTrace {
  std::vector<FtaSampleTrace<T>> samples;
  std::vector<BinaryMask> masks;
};

/// Foreground temporal alignment over a batch.
///
/// `masks[n]` is the reference mask for sample n; an unusable mask leaves the
/// sample untouched. With `adaptive` false the weight is fixed to 1.
template <typename T>
Tensor<T> fta_forward(const Tensor<T>& f_a, const Tensor<T>& f_r, std::span<const BinaryMask> masks, bool adaptive,
                      FtaTrace<T>* trace = nullptr) {
  f_a.require_same_shape(f_r, "fta_forward");
  if (static_cast<int>(masks.size()) != f_a.n()) throw ShapeError("fta_forward: one mask per sample required");
  Tensor<T> out = f_a;
  if (trace) {
    trace->samples.assign(f_a.n(), {});
    trace->masks.assign(masks.begin(), masks.end());
  }
  for (int n = 0; n < f_a.n(); ++n) {
    if (!masks[n].usable()) continue;
    FtaSampleTrace<T> s;
    s.applied = true;
    s.raw_r = masked_channel_pool(f_r, n, masks[n]);
    s.f_r = normalize_pattern(s.raw_r);
    if (adaptive) {
      s.raw_a = masked_channel_pool(f_a, n, masks[n]);
      s.f_a = normalize_pattern(s.raw_a);
      s.weight = similarity_weight(s.f_r, s.f_a);
    }
    out.set_sample(n, fta_fuse(f_a, n, s.f_r.values, s.weight.alpha));
    if (trace) trace->samples[n] = std::move(s);
  }
  return out;
}

/// Gradients with respect to the anchor and reference inputs.
template <typename T>
void fta_backward(const Tensor<T>& f_a, const FtaTrace<T>& trace, const Tensor<T>& grad_out, Tensor<T>& grad_a,
                  Tensor<T>& grad_r) {
  grad_a = grad_out;
  if (grad_r.empty()) grad_r = Tensor<T>(f_a.n(), f_a.c(), f_a.h(), f_a.w());
  const int C = f_a.c();
  for (int n = 0; n < f_a.n(); ++n) {
    const auto& s = trace.samples[n];
    if (!s.applied) continue;
    std::vector<T> sens(C, T(0));  // sum over pixels of grad * F_a
    for (int c = 0; c < C; ++c) {
      const auto go = grad_out.plane(n, c);
      const auto fa = f_a.plane(n, c);
      auto ga = grad_a.plane(n, c);
      const T scale = T(1) + s.weight.alpha * s.f_r.values[c];
      T acc = T(0);
      for (std::size_t i = 0; i < go.size(); ++i) {
        ga[i] = go[i] * scale;
        acc += go[i] * fa[i];
      }
      sens[c] = acc;
    }
    std::vector<T> g_fr(C);
    for (int c = 0; c < C; ++c) g_fr[c] = s.weight.alpha * sens[c];
    const bool adaptive = !s.f_a.values.empty();
    if (adaptive && !s.weight.degenerate) {
      const T g_alpha = dot(s.f_r.values, sens);
      std::vector<T> gr2, ga2;
      similarity_weight_backward(s.f_r.values, s.f_a.values, s.weight, g_alpha, gr2, ga2);
      for (int c = 0; c < C; ++c) g_fr[c] += gr2[c];
      masked_channel_pool_backward(normalize_pattern_backward(s.f_a, ga2), trace.masks[n], 1, grad_a, n);
    }
    masked_channel_pool_backward(normalize_pattern_backward(s.f_r, g_fr), trace.masks[n], 1, grad_r, n);
  }
}

}  // namespace vidalign::alignment
