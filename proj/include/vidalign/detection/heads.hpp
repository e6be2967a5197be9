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
#include <array>
#include <cmath>
#include <string>

#include "vidalign/core/tensor.hpp"
#include "vidalign/nn/conv.hpp"
#include "vidalign/nn/ops.hpp"

namespace vidalign::detection {

/// Dense head outputs on the stride-4 grid.
template <typename T>
struct DetectorOutputs {
  Tensor<T> center_heatmap;  // N x 1 x H x W, logistic of the center logit
  Tensor<T> size_map;        // N x 2 x H x W, (width, height) in grid cells
  Tensor<T> offset_map;      // N x 2 x H x W, sub-cell center offset (dx, dy)
};

template <typename T>
struct HeadsTrace {
  Tensor<T> input;
  std::array<Tensor<T>, 3> hidden;  // relu(3x3 conv) per branch
};

enum class HeadKind { center = 0, size = 1, offset = 2 };

/// Three parallel branches, each 3x3 conv -> relu -> 1x1 conv.
template <typename T>
class Heads {
 public:
  /// Center logit bias at init, the log-odds of a 0.1 prior.
  static constexpr double kCenterPriorBias = -2.19;
  /// Heatmap values are clamped to [kHeatmapFloor, 1 - kHeatmapFloor].
  static constexpr double kHeatmapFloor = 1e-4;

  Heads() = default;
  Heads(int in_channels, int head_width) : in_(in_channels), width_(head_width) {
    constexpr std::array<const char*, 3> names{"heads.center", "heads.size", "heads.offset"};
    constexpr std::array<int, 3> outs{1, 2, 2};
    for (int b = 0; b < 3; ++b) {
      hidden_[b] = nn::Conv2d<T>(std::string(names[b]) + ".hidden", in_channels, head_width, 3, 1);
      out_[b] = nn::Conv2d<T>(std::string(names[b]) + ".out", head_width, outs[b], 1, 1);
    }
  }

  int in_channels() const { return in_; }
  int width() const { return width_; }

  void init(nn::Rng& rng) {
    for (int b = 0; b < 3; ++b) {
      hidden_[b].init(rng);
      out_[b].init(rng);
    }
    for (auto& v : out_[0].bias().value) v = static_cast<T>(kCenterPriorBias);
  }

  void collect(nn::ParameterRefs<T>& out) {
    for (int b = 0; b < 3; ++b) {
      hidden_[b].collect(out);
      out_[b].collect(out);
    }
  }

  DetectorOutputs<T> forward(const Tensor<T>& feature, HeadsTrace<T>* trace = nullptr) const {
    std::array<Tensor<T>, 3> raw;
    for (int b = 0; b < 3; ++b) {
      Tensor<T> h = nn::relu(hidden_[b].forward(feature));
      raw[b] = out_[b].forward(h);
      if (trace) trace->hidden[b] = std::move(h);
    }
    if (trace) trace->input = feature;
    Tensor<T> heat = nn::sigmoid(std::move(raw[0]));
    const T lo = static_cast<T>(kHeatmapFloor), hi = static_cast<T>(1.0 - kHeatmapFloor);
    for (auto& v : heat.storage()) v = std::clamp(v, lo, hi);
    return {std::move(heat), std::move(raw[1]), std::move(raw[2])};
  }

  /// Gradients are with respect to the three output maps (heatmap after the
  /// logistic). Returns the gradient for the input feature.
  Tensor<T> backward(const HeadsTrace<T>& trace, const DetectorOutputs<T>& outputs, const DetectorOutputs<T>& grads) {
    Tensor<T> gheat = nn::sigmoid_backward(outputs.center_heatmap, grads.center_heatmap);
    const T lo = static_cast<T>(kHeatmapFloor), hi = static_cast<T>(1.0 - kHeatmapFloor);
    for (std::size_t i = 0; i < gheat.size(); ++i) {
      const T y = outputs.center_heatmap.storage()[i];
      if (y <= lo || y >= hi) gheat.storage()[i] = T(0);
    }
    std::array<Tensor<T>, 3> graw{std::move(gheat), grads.size_map, grads.offset_map};
    Tensor<T> gin(trace.input.n(), trace.input.c(), trace.input.h(), trace.input.w());
    for (int b = 0; b < 3; ++b) {
      Tensor<T> gh = out_[b].backward(trace.hidden[b], graw[b]);
      gh = nn::relu_backward(trace.hidden[b], std::move(gh));
      gin += hidden_[b].backward(trace.input, gh);
    }
    return gin;
  }

  nn::Conv2d<T>& hidden(HeadKind k) { return hidden_[static_cast<int>(k)]; }
  nn::Conv2d<T>& output(HeadKind k) { return out_[static_cast<int>(k)]; }

 private:
  int in_ = 0, width_ = 0;
  std::array<nn::Conv2d<T>, 3> hidden_;
  std::array<nn::Conv2d<T>, 3> out_;
};

}  // namespace vidalign::detection
