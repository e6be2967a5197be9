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

#include <array>
#include <string>
#include <vector>

#include "vidalign/detection/backbone.hpp"

namespace vidalign::detection {

/// The stride-2 stem stage is not fused; the pyramid starts at stride 4.
inline constexpr int kFirstFusedStage = 1;
inline constexpr int kNumFused = kNumStages - kFirstFusedStage;
inline constexpr int kFusedStride = 4;

template <typename T>
struct FusionTrace {
  std::array<Tensor<T>, kNumFused> lateral_in;  // copies of fused stage inputs
  Tensor<T> merged;                             // pre-smoothing sum at stride 4
};

/// Top-down feature pyramid: 1x1 lateral per stage, nearest upsample, sum,
/// then a 3x3 smoothing conv. Output is the single stride-4 intermediate map.
template <typename T>
class Fusion {
 public:
  Fusion() = default;
  Fusion(const std::array<int, kNumStages>& stage_widths, int width) : width_(width) {
    for (int i = 0; i < kNumFused; ++i)
      lateral_[i] = nn::Conv2d<T>("fusion.lateral" + std::to_string(i + kFirstFusedStage + 1),
                                  stage_widths[i + kFirstFusedStage], width, 1, 1);
    smooth_ = nn::Conv2d<T>("fusion.smooth", width, width, 3, 1);
  }

  int width() const { return width_; }

  void init(nn::Rng& rng) {
    for (auto& l : lateral_) l.init(rng);
    smooth_.init(rng);
  }

  void collect(nn::ParameterRefs<T>& out) {
    for (auto& l : lateral_) l.collect(out);
    smooth_.collect(out);
  }

  /// Sum of upsampled lateral projections at stride 4, before smoothing.
  Tensor<T> merge(const std::vector<FeatureMap<T>>& stages) const {
    check(stages);
    Tensor<T> acc = lateral_[kNumFused - 1].forward(stages[kNumStages - 1].data);
    for (int i = kNumFused - 2; i >= 0; --i) {
      Tensor<T> up = nn::upsample_nearest(acc, 2);
      Tensor<T> lat = lateral_[i].forward(stages[i + kFirstFusedStage].data);
      lat += up;
      acc = std::move(lat);
    }
    return acc;
  }

  FeatureMap<T> forward(const std::vector<FeatureMap<T>>& stages, FusionTrace<T>* trace = nullptr) const {
    Tensor<T> merged = merge(stages);
    FeatureMap<T> out{smooth_.forward(merged), kFusedStride};
    if (trace) {
      for (int i = 0; i < kNumFused; ++i) trace->lateral_in[i] = stages[i + kFirstFusedStage].data;
      trace->merged = std::move(merged);
    }
    return out;
  }

  /// Returns gradients for all four backbone stages (stage 0 left empty).
  std::array<Tensor<T>, kNumStages> backward(const FusionTrace<T>& trace, const Tensor<T>& grad_out) {
    std::array<Tensor<T>, kNumStages> grads;
    Tensor<T> g = smooth_.backward(trace.merged, grad_out);
    for (int i = 0; i < kNumFused; ++i) {
      grads[i + kFirstFusedStage] = lateral_[i].backward(trace.lateral_in[i], g);
      if (i + 1 < kNumFused) g = nn::upsample_nearest_backward(g, 2);
    }
    return grads;
  }

  std::array<nn::Conv2d<T>, kNumFused>& laterals() { return lateral_; }
  nn::Conv2d<T>& smooth() { return smooth_; }

 private:
  void check(const std::vector<FeatureMap<T>>& stages) const {
    if (stages.size() != kNumStages) throw ShapeError("fuse_multiscale: expected 4 stages");
    for (int s = 0; s < kNumStages; ++s) {
      if (stages[s].n() != stages[0].n()) throw ShapeError("fuse_multiscale: mismatched batch sizes across stages");
      if (s > 0 && stages[s].stride <= stages[s - 1].stride)
        throw ShapeError("fuse_multiscale: stages must be ordered by increasing stride");
    }
  }

  int width_ = 64;
  std::array<nn::Conv2d<T>, kNumFused> lateral_;
  nn::Conv2d<T> smooth_;
};

}  // namespace vidalign::detection
