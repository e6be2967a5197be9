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

#include <optional>
#include <vector>

#include "vidalign/alignment/temporal.hpp"
#include "vidalign/dataset/sequence.hpp"
#include "vidalign/detection/decode.hpp"
#include "vidalign/pipeline/model.hpp"

namespace vidalign::pipeline {

struct FrameResult {
  std::vector<Detection> detections;  // original image coordinates
  bool fta_applied = false;
  double alpha = 0;  // adaptive weight when FTA ran, else 0
};

/// Sequential video inference. Frame t uses frame t-1 as reference: its
/// cached feature and its detections scoring above the gate threshold. Frame
/// 0 has no reference, skips FTA and aligns against itself. Every image
/// passes the backbone exactly once.
template <typename T>
class VideoInference {
 public:
  VideoInference(const VideoDetector<T>& model, const PipelineConfig& cfg) : model_(model), cfg_(cfg) {}

  FrameResult step(const dataset::Image& frame) {
    const double sy = static_cast<double>(frame.height) / cfg_.input_height;
    const double sx = static_cast<double>(frame.width) / cfg_.input_width;
    const auto input = dataset::to_tensor<T>(frame.height == cfg_.input_height && frame.width == cfg_.input_width
                                                 ? frame
                                                 : dataset::resize(frame, cfg_.input_height, cfg_.input_width));
    FeatureMap<T> feat = model_.base().features(input);
    const detection::Grid grid{feat.h(), feat.w(), feat.stride};
    const auto& sw = cfg_.modules;

    FrameResult result;
    Tensor<T> x = feat.data;
    if (sw.fta && previous_) {
      const auto mask = alignment::fta_gate(std::span<const Detection>(previous_dets_), cfg_.fta_confidence_threshold, grid);
      if (mask.usable()) {
        alignment::FtaTrace<T> trace;
        x = alignment::fta_forward(feat.data, previous_->data, std::span<const alignment::BinaryMask>(&mask, 1),
                                   sw.adaptive_weight, &trace);
        result.fta_applied = true;
        result.alpha = static_cast<double>(trace.samples[0].weight.alpha);
      }
    }
    if (sw.bda) x = model_.bda().forward(x, previous_ ? previous_->data : feat.data);

    const auto outputs = model_.base().heads().forward(x);
    // Candidates in input coordinates; the gate for the next frame reads them too.
    auto candidates = detection::decode_detections(outputs, 0, feat.stride, cfg_.inference_max_detections, 0.0);
    for (const auto& d : candidates) {
      if (d.score < cfg_.inference_score_threshold) continue;
      result.detections.push_back({d.cx * sx, d.cy * sy, d.w * sx, d.h * sy, d.score});
    }
    previous_dets_ = std::move(candidates);
    previous_ = std::move(feat);
    return result;
  }

  void reset() {
    previous_.reset();
    previous_dets_.clear();
  }

 private:
  const VideoDetector<T>& model_;
  PipelineConfig cfg_;
  std::optional<FeatureMap<T>> previous_;
  std::vector<Detection> previous_dets_;
};

template <typename T>
std::vector<FrameResult> infer_video(const dataset::VideoSequence& seq, const VideoDetector<T>& model,
                                     const PipelineConfig& cfg) {
  VideoInference<T> runner(model, cfg);
  std::vector<FrameResult> out;
  out.reserve(seq.frames.size());
  for (const auto& frame : seq.frames) out.push_back(runner.step(frame));
  return out;
}

/// Single-image output of the bare detector, same decoding as `infer_video`.
template <typename T>
std::vector<Detection> detect_image(const BaseDetector<T>& det, const dataset::Image& frame, const PipelineConfig& cfg) {
  const double sy = static_cast<double>(frame.height) / cfg.input_height;
  const double sx = static_cast<double>(frame.width) / cfg.input_width;
  const auto input = dataset::to_tensor<T>(frame.height == cfg.input_height && frame.width == cfg.input_width
                                               ? frame
                                               : dataset::resize(frame, cfg.input_height, cfg.input_width));
  const FeatureMap<T> feat = det.features(input);
  const auto outputs = det.heads().forward(feat.data);
  std::vector<Detection> out;
  for (const auto& d : detection::decode_detections(outputs, 0, feat.stride, cfg.inference_max_detections, 0.0))
    if (d.score >= cfg.inference_score_threshold) out.push_back({d.cx * sx, d.cy * sy, d.w * sx, d.h * sy, d.score});
  return out;
}

}  // namespace vidalign::pipeline
