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

#include "vidalign/core/tensor.hpp"
#include "vidalign/nn/conv.hpp"
#include "vidalign/nn/ops.hpp"

namespace vidalign::detection {

inline constexpr int kNumStages = 4;
inline constexpr std::array<int, kNumStages> kStageStrides{2, 4, 8, 16};

/// Activations kept from a backbone forward pass for the backward pass.
template <typename T>
struct BackboneTrace {
  Tensor<T> input;
  std::array<Tensor<T>, kNumStages> down;  // relu(strided conv)
  std::array<Tensor<T>, kNumStages> out;   // relu(refining conv)
};

/// Four-stage convolutional pyramid. Each stage halves the resolution with a
/// strided 3x3 conv and refines with a second 3x3 conv, both followed by relu.
template <typename T>
class Backbone {
 public:
  Backbone() = default;
  explicit Backbone(std::array<int, kNumStages> widths, int in_channels = 3) : widths_(widths) {
    int in = in_channels;
    for (int s = 0; s < kNumStages; ++s) {
      const std::string prefix = "backbone.stage" + std::to_string(s + 1);
      down_[s] = nn::Conv2d<T>(prefix + ".down", in, widths[s], 3, 2);
      refine_[s] = nn::Conv2d<T>(prefix + ".refine", widths[s], widths[s], 3, 1);
      in = widths[s];
    }
  }

  const std::array<int, kNumStages>& widths() const { return widths_; }

  void init(nn::Rng& rng) {
    for (int s = 0; s < kNumStages; ++s) {
      down_[s].init(rng);
      refine_[s].init(rng);
    }
  }

  void collect(nn::ParameterRefs<T>& out) {
    for (int s = 0; s < kNumStages; ++s) {
      down_[s].collect(out);
      refine_[s].collect(out);
    }
  }

  /// Returns stage outputs at strides 2, 4, 8, 16. Fills `trace` when given.
  std::vector<FeatureMap<T>> forward(const Tensor<T>& image, BackboneTrace<T>* trace = nullptr) const {
    if (image.c() != down_[0].in_channels())
      throw ShapeError("extract_features: expected " + std::to_string(down_[0].in_channels()) +
                       "-channel image, got " + image.shape_string());
    if (image.h() % 16 != 0 || image.w() % 16 != 0 || image.h() == 0 || image.w() == 0)
      throw ShapeError("extract_features: image size " + std::to_string(image.h()) + "x" +
                       std::to_string(image.w()) + " is not divisible by 16");
    std::vector<FeatureMap<T>> stages;
    stages.reserve(kNumStages);
    const Tensor<T>* x = &image;
    for (int s = 0; s < kNumStages; ++s) {
      Tensor<T> d = nn::relu(down_[s].forward(*x));
      Tensor<T> o = nn::relu(refine_[s].forward(d));
      stages.push_back({o, kStageStrides[s]});
      if (trace) {
        trace->down[s] = std::move(d);
        trace->out[s] = std::move(o);
      }
      x = &stages.back().data;
    }
    if (trace) trace->input = image;
    return stages;
  }

  /// `grad_out[s]` may be empty for stages that received no gradient.
  void backward(const BackboneTrace<T>& trace, const std::array<Tensor<T>, kNumStages>& grad_out) {
    Tensor<T> carry;  // gradient flowing into stage s output from stage s+1
    for (int s = kNumStages - 1; s >= 0; --s) {
      Tensor<T> g = carry;
      if (!grad_out[s].empty()) {
        if (g.empty())
          g = grad_out[s];
        else
          g += grad_out[s];
      }
      if (g.empty()) continue;
      g = nn::relu_backward(trace.out[s], std::move(g));
      g = refine_[s].backward(trace.down[s], g);
      g = nn::relu_backward(trace.down[s], std::move(g));
      const Tensor<T>& in = s == 0 ? trace.input : trace.out[s - 1];
      carry = down_[s].backward(in, g, s > 0);
    }
  }

  std::array<nn::Conv2d<T>, kNumStages>& down_convs() { return down_; }
  std::array<nn::Conv2d<T>, kNumStages>& refine_convs() { return refine_; }

 private:
  std::array<int, kNumStages> widths_{16, 32, 64, 128};
  std::array<nn::Conv2d<T>, kNumStages> down_;
  std::array<nn::Conv2d<T>, kNumStages> refine_;
};

}  // namespace vidalign::detection
