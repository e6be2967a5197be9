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

#include <algorithm>
#include <cstdint>
#include <vector>

#include "vidalign/alignment/mask.hpp"
#include "vidalign/core/tensor.hpp"

namespace vidalign::alignment {

/// Per-channel mean of sample `n` of `f` over pixels where mask == `select`.
template <typename T>
std::vector<T> masked_channel_pool(const Tensor<T>& f, int n, const BinaryMask& mask, std::uint8_t select = 1) {
  if (mask.h != f.h() || mask.w != f.w())
    throw ShapeError("masked_channel_pool: mask " + std::to_string(mask.h) + "x" + std::to_string(mask.w) +
                     " does not match feature " + f.shape_string());
  const int count = mask.count(select);
  if (count == 0) throw ValueError("masked_channel_pool: empty mask region");
  std::vector<T> out(f.c(), T(0));
  for (int c = 0; c < f.c(); ++c) {
    auto plane = f.plane(n, c);
    double acc = 0;
    for (std::size_t i = 0; i < plane.size(); ++i)
      if (mask.data[i] == select) acc += plane[i];
    out[c] = static_cast<T>(acc / count);
  }
  return out;
}

/// Adds d(pool)/d(f) * grad into sample `n` of `gf`.
template <typename T>
void masked_channel_pool_backward(const std::vector<T>& grad, const BinaryMask& mask, std::uint8_t select,
                                  Tensor<T>& gf, int n) {
  const int count = mask.count(select);
  if (count == 0) return;
  for (int c = 0; c < gf.c(); ++c) {
    auto plane = gf.plane(n, c);
    const T g = grad[c] / static_cast<T>(count);
    for (std::size_t i = 0; i < plane.size(); ++i)
      if (mask.data[i] == select) plane[i] += g;
  }
}

/// Min-max normalized channel vector in [0, 1]. Remembers the extremal
/// indices for the backward pass; a constant input maps to all zeros.
template <typename T>
struct ChannelPattern {
  std::vector<T> values;
  int argmin = -1;
  int argmax = -1;
  T range = T(0);  // max - min of the raw vector; 0 when degenerate

  bool degenerate() const { return !(range > T(0)); }
  std::size_t size() const { return values.size(); }
};

template <typename T>
ChannelPattern<T> normalize_pattern(const std::vector<T>& raw) {
  ChannelPattern<T> p;
  p.values.assign(raw.size(), T(0));
  if (raw.empty()) return p;
  p.argmin = static_cast<int>(std::min_element(raw.begin(), raw.end()) - raw.begin());
  p.argmax = static_cast<int>(std::max_element(raw.begin(), raw.end()) - raw.begin());
  const T lo = raw[p.argmin];
  p.range = raw[p.argmax] - lo;
  if (p.degenerate()) {
    p.range = T(0);
    return p;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) p.values[i] = (raw[i] - lo) / p.range;
  return p;
}

/// Gradient of min-max normalization with respect to the raw vector.
template <typename T>
std::vector<T> normalize_pattern_backward(const ChannelPattern<T>& p, const std::vector<T>& grad) {
  std::vector<T> g(grad.size(), T(0));
  if (p.degenerate()) return g;
  T to_min = T(0), to_max = T(0);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    g[i] += grad[i] / p.range;
    to_min += grad[i] * (p.values[i] - T(1)) / p.range;
    to_max -= grad[i] * p.values[i] / p.range;
  }
  g[p.argmin] += to_min;
  g[p.argmax] += to_max;
  return g;
}

}  // namespace vidalign::alignment
