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
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "vidalign/alignment/temporal.hpp"
#include "vidalign/contrastive/cbcl.hpp"
#include "vidalign/dataset/sequence.hpp"
#include "vidalign/detection/loss.hpp"
#include "vidalign/nn/adam.hpp"
#include "vidalign/pipeline/augment.hpp"
#include "vidalign/pipeline/model.hpp"

namespace vidalign::pipeline {

struct TrainLoss {
  double detection = 0;
  double contrastive = 0;
  double total = 0;
};

/// One row of the loss trace CSV.
struct LossRow {
  int epoch = 0;
  long step = 0;
  TrainLoss loss;
};

/// Network-ready batch: N images per role plus ground-truth boxes.
template <typename T>
struct PairBatch {
  Tensor<T> anchor;     // N x 3 x H x W
  Tensor<T> reference;  // N x 3 x H x W
  std::vector<std::vector<Detection>> anchor_boxes;
  std::vector<std::vector<Detection>> reference_boxes;

  int size() const { return anchor.n(); }
};

template <typename T>
PairBatch<T> make_batch(std::span<const FramePair> pairs) {
  std::vector<Tensor<T>> a, r;
  PairBatch<T> b;
  for (const auto& p : pairs) {
    a.push_back(dataset::to_tensor<T>(p.anchor));
    r.push_back(dataset::to_tensor<T>(p.reference));
    std::vector<Detection> ab, rb;
    for (const auto& box : p.anchor_boxes) ab.push_back(Detection::from_box(box));
    for (const auto& box : p.reference_boxes) rb.push_back(Detection::from_box(box));
    b.anchor_boxes.push_back(std::move(ab));
    b.reference_boxes.push_back(std::move(rb));
  }
  b.anchor = concat_batch<T>(a);
  b.reference = concat_batch<T>(r);
  return b;
}

namespace detail {

inline std::vector<alignment::BinaryMask> gt_masks(const std::vector<std::vector<Detection>>& boxes,
                                                   const detection::Grid& grid) {
  std::vector<alignment::BinaryMask> masks;
  for (const auto& b : boxes)
    masks.push_back(alignment::rasterize_boxes(std::span<const Detection>(b), grid, alignment::MaskSource::ground_truth));
  return masks;
}

template <typename T>
detection::LossWeights loss_weights(const PipelineConfig& cfg) {
  return {cfg.size_weight, cfg.offset_weight};
}

}  // namespace detail

/// Forward and backward of the bare single-frame detector on the anchor
/// frames. Accumulates parameter gradients; does not step.
template <typename T>
TrainLoss base_forward_backward(BaseDetector<T>& det, const PairBatch<T>& batch, const PipelineConfig& cfg) {
  FeatureTrace<T> trace;
  const FeatureMap<T> feat = det.features(batch.anchor, &trace);
  const detection::Grid grid{feat.h(), feat.w(), feat.stride};
  detection::HeadsTrace<T> htrace;
  const auto outputs = det.heads().forward(feat.data, &htrace);
  const auto targets = detection::render_targets<T>(std::span<const std::vector<Detection>>(batch.anchor_boxes), grid);
  const auto loss = detection::detection_loss_with_grad(outputs, targets, detail::loss_weights<T>(cfg));
  det.features_backward(trace, det.heads().backward(htrace, outputs, loss.grad));
  return {loss.record.total, 0.0, loss.record.total};
}

/// Forward and backward of the full model:
///   features -> FTA (reference GT mask) -> BDA -> heads -> detection loss,
/// plus lambda_contrast * contrastive loss on the intermediate features.
/// Disabled modules act as identities. Accumulates gradients; does not step.
template <typename T, typename Rng>
TrainLoss forward_backward(VideoDetector<T>& model, const PairBatch<T>& batch, const PipelineConfig& cfg, Rng& rng) {
  const auto& sw = cfg.modules;
  const bool use_cbcl = sw.cbcl && cfg.contrastive_weight > 0.0;
  if (!sw.fta && !sw.bda && !use_cbcl) return base_forward_backward(model.base(), batch, cfg);

  FeatureTrace<T> trace_a, trace_r;
  const FeatureMap<T> feat_a = model.base().features(batch.anchor, &trace_a);
  const FeatureMap<T> feat_r = model.base().features(batch.reference, &trace_r);
  const detection::Grid grid{feat_a.h(), feat_a.w(), feat_a.stride};
  const auto masks_r = detail::gt_masks(batch.reference_boxes, grid);

  alignment::FtaTrace<T> fta_trace;
  Tensor<T> enhanced = sw.fta ? alignment::fta_forward(feat_a.data, feat_r.data, std::span<const alignment::BinaryMask>(masks_r),
                                                       sw.adaptive_weight, &fta_trace)
                              : feat_a.data;
  alignment::BdaTrace<T> bda_trace;
  Tensor<T> aligned = sw.bda ? model.bda().forward(enhanced, feat_r.data, &bda_trace) : enhanced;

  detection::HeadsTrace<T> htrace;
  const auto outputs = model.base().heads().forward(aligned, &htrace);
  const auto targets = detection::render_targets<T>(std::span<const std::vector<Detection>>(batch.anchor_boxes), grid);
  const auto det = detection::detection_loss_with_grad(outputs, targets, detail::loss_weights<T>(cfg));

  TrainLoss loss;
  loss.detection = det.record.total;

  Tensor<T> grad_a, grad_r(feat_r.n(), feat_r.c(), feat_r.h(), feat_r.w());
  if (use_cbcl) {
    const auto masks_a = detail::gt_masks(batch.anchor_boxes, grid);
    auto cb = contrastive::cbcl_forward_backward(feat_a.data, feat_r.data, std::span<const alignment::BinaryMask>(masks_a),
                                                 std::span<const alignment::BinaryMask>(masks_r),
                                                 static_cast<T>(cfg.contrastive_temperature), rng);
    loss.contrastive = static_cast<double>(cb.loss);
    grad_a = nn::scaled(std::move(cb.grad_anchor), static_cast<T>(cfg.contrastive_weight));
    grad_r = nn::scaled(std::move(cb.grad_reference), static_cast<T>(cfg.contrastive_weight));
  }
  loss.total = loss.detection + cfg.contrastive_weight * loss.contrastive;

  Tensor<T> g = model.base().heads().backward(htrace, outputs, det.grad);
  if (sw.bda) {
    Tensor<T> g_enh, g_ref;
    model.bda().backward(bda_trace, g, g_enh, g_ref);
    grad_r += g_ref;
    g = std::move(g_enh);
  }
  if (sw.fta) {
    Tensor<T> g_anchor, g_ref;
    alignment::fta_backward(feat_a.data, fta_trace, g, g_anchor, g_ref);
    grad_r += g_ref;
    g = std::move(g_anchor);
  }
  if (grad_a.empty())
    grad_a = std::move(g);
  else
    grad_a += g;

  model.base().features_backward(trace_a, grad_a);
  model.base().features_backward(trace_r, grad_r);
  return loss;
}

template <typename T, typename Rng>
TrainLoss train_step(VideoDetector<T>& model, const PairBatch<T>& batch, const PipelineConfig& cfg, nn::Adam<T>& opt,
                     Rng& rng) {
  model.zero_grad();
  const TrainLoss loss = forward_backward(model, batch, cfg, rng);
  auto params = model.parameters();
  opt.step(params);
  return loss;
}

/// All (t, t-1) frame pairs of a dataset, in sequence then frame order.
inline std::vector<FramePair> make_pairs(std::span<const dataset::VideoSequence> sequences) {
  std::vector<FramePair> pairs;
  for (const auto& seq : sequences)
    for (int t = 1; t < seq.size(); ++t)
      pairs.push_back({seq.frames[t], seq.frames[t - 1], seq.boxes(t), seq.boxes(t - 1)});
  return pairs;
}

struct TrainHooks {
  std::function<void(const LossRow&)> on_step;
  /// Called after every epoch; returning true stops training early.
  std::function<bool(int epoch)> on_epoch_end;
};

/// Epoch loop: shuffle pairs, augment, batch, step; cosine learning rate per
/// epoch. All randomness comes from one generator seeded by cfg.seed.
template <typename T>
std::vector<LossRow> train(VideoDetector<T>& model, std::span<const FramePair> pairs, const PipelineConfig& cfg,
                           const TrainHooks& hooks = {}) {
  nn::Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  nn::Adam<T> opt({cfg.optim.lr, 0.9, 0.999, 1e-8, cfg.optim.weight_decay});
  std::vector<LossRow> rows;
  std::vector<std::size_t> order(pairs.size());
  long step = 0;
  for (int epoch = 0; epoch < cfg.optim.epochs; ++epoch) {
    opt.set_lr(nn::cosine_lr(cfg.optim.lr, cfg.optim.lr_min, epoch, cfg.optim.epochs));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.optim.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.optim.batch_size));
      std::vector<FramePair> chunk;
      for (std::size_t i = start; i < end; ++i)
        chunk.push_back(augment(pairs[order[i]], cfg.augment, cfg.input_height, cfg.input_width, rng));
      const auto batch = make_batch<T>(chunk);
      LossRow row{epoch, step++, train_step(model, batch, cfg, opt, rng)};
      rows.push_back(row);
      if (hooks.on_step) hooks.on_step(row);
    }
    if (hooks.on_epoch_end && hooks.on_epoch_end(epoch)) break;
  }
  return rows;
}

/// Bare detector training with the same data order and augmentation draws as
/// `train`, for ablation comparisons.
template <typename T>
std::vector<LossRow> train_base(BaseDetector<T>& det, std::span<const FramePair> pairs, const PipelineConfig& cfg) {
  nn::Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  nn::Adam<T> opt({cfg.optim.lr, 0.9, 0.999, 1e-8, cfg.optim.weight_decay});
  nn::ParameterRefs<T> params;
  det.collect(params);
  std::vector<LossRow> rows;
  std::vector<std::size_t> order(pairs.size());
  long step = 0;
  for (int epoch = 0; epoch < cfg.optim.epochs; ++epoch) {
    opt.set_lr(nn::cosine_lr(cfg.optim.lr, cfg.optim.lr_min, epoch, cfg.optim.epochs));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.optim.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.optim.batch_size));
      std::vector<FramePair> chunk;
      for (std::size_t i = start; i < end; ++i)
        chunk.push_back(augment(pairs[order[i]], cfg.augment, cfg.input_height, cfg.input_width, rng));
      const auto batch = make_batch<T>(chunk);
      for (auto& p : params) p.get().zero_grad();
      const TrainLoss loss = base_forward_backward(det, batch, cfg);
      opt.step(params);
      rows.push_back({epoch, step++, loss});
    }
  }
  return rows;
}

}  // namespace vidalign::pipeline
