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

#include <cstdint>

#include "vidalign/alignment/deformable.hpp"
#include "vidalign/detection/fusion.hpp"
#include "vidalign/detection/heads.hpp"
#include "vidalign/pipeline/config.hpp"

namespace vidalign::pipeline {

/// Intermediate stride-4 feature of one batch plus what backward needs.
template <typename T>
struct FeatureTrace {
  detection::BackboneTrace<T> backbone;
  detection::FusionTrace<T> fusion;
};

/// Single-frame center-point detector: backbone, fusion, heads.
template <typename T>
class BaseDetector {
 public:
  BaseDetector() = default;
  explicit BaseDetector(const ModelArch& arch)
      : arch_(arch),
        backbone_(arch.backbone_widths),
        fusion_(arch.backbone_widths, arch.fusion_width),
        heads_(arch.fusion_width, arch.head_width) {}

  const ModelArch& arch() const { return arch_; }

  void init(nn::Rng& rng) {
    backbone_.init(rng);
    fusion_.init(rng);
    heads_.init(rng);
  }

  void collect(nn::ParameterRefs<T>& out) {
    backbone_.collect(out);
    fusion_.collect(out);
    heads_.collect(out);
  }

  /// Image batch -> stride-4 intermediate feature. Counts backbone passes.
  FeatureMap<T> features(const Tensor<T>& images, FeatureTrace<T>* trace = nullptr) const {
    ++backbone_calls_;
    auto stages = backbone_.forward(images, trace ? &trace->backbone : nullptr);
    return fusion_.forward(stages, trace ? &trace->fusion : nullptr);
  }

  void features_backward(const FeatureTrace<T>& trace, const Tensor<T>& grad) {
    backbone_.backward(trace.backbone, fusion_.backward(trace.fusion, grad));
  }

  detection::Backbone<T>& backbone() { return backbone_; }
  detection::Fusion<T>& fusion() { return fusion_; }
  detection::Heads<T>& heads() { return heads_; }
  const detection::Heads<T>& heads() const { return heads_; }

  std::uint64_t backbone_calls() const { return backbone_calls_; }
  void reset_backbone_calls() { backbone_calls_ = 0; }

 private:
  ModelArch arch_;
  detection::Backbone<T> backbone_;
  detection::Fusion<T> fusion_;
  detection::Heads<T> heads_;
  mutable std::uint64_t backbone_calls_ = 0;
};

/// Base detector plus the background alignment block. The foreground
/// alignment and contrastive branches are parameter-free.
template <typename T>
class VideoDetector {
 public:
  VideoDetector() = default;
  explicit VideoDetector(const ModelArch& arch) : base_(arch), bda_(arch.fusion_width) {}

  /// Base detector parameters are drawn first, so a bare BaseDetector
  /// initialised from the same seed holds identical weights.
  void init(std::uint64_t seed) {
    nn::Rng rng(seed);
    base_.init(rng);
    bda_.init(rng);
  }

  nn::ParameterRefs<T> parameters() {
    nn::ParameterRefs<T> out;
    base_.collect(out);
    bda_.collect(out);
    return out;
  }

  void zero_grad() {
    for (auto& p : parameters()) p.get().zero_grad();
  }

  const ModelArch& arch() const { return base_.arch(); }
  BaseDetector<T>& base() { return base_; }
  const BaseDetector<T>& base() const { return base_; }
  alignment::BackgroundAlignment<T>& bda() { return bda_; }
  const alignment::BackgroundAlignment<T>& bda() const { return bda_; }

 private:
  BaseDetector<T> base_;
  alignment::BackgroundAlignment<T> bda_;
};

}  // namespace vidalign::pipeline
