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
#include <cmath>

#include "vidalign/detection/heads.hpp"
#include "vidalign/detection/targets.hpp"

namespace vidalign::detection {

struct LossWeights {
  double size = 0.1;
  double offset = 1.0;
};

/// Unweighted components; total = center + size_w * size + offset_w * offset.
struct DetectionLossRecord {
  double center = 0;
  double size = 0;
  double offset = 0;
  double total = 0;
};

template <typename T>
struct DetectionLossResult {
  DetectionLossRecord record;
  DetectorOutputs<T> grad;  // d total / d each output map
};

namespace detail {

inline constexpr double kLogFloor = 1e-12;

inline double safe_log(double v) { return std::log(std::max(v, kLogFloor)); }

inline double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace detail

/// Penalty-reduced pixelwise focal loss (alpha = 2, beta = 4) on the heatmap
/// plus L1 on size and offset at positive cells. All three terms are divided
/// by the positive-cell count, clamped to at least 1.
template <typename T>
DetectionLossResult<T> detection_loss_with_grad(const DetectorOutputs<T>& out, const GroundTruthTargets<T>& tgt,
                                                const LossWeights& weights) {
  out.center_heatmap.require_same_shape(tgt.heatmap, "detection_loss(center)");
  out.size_map.require_same_shape(tgt.size, "detection_loss(size)");
  out.offset_map.require_same_shape(tgt.offset, "detection_loss(offset)");

  const int N = out.center_heatmap.n(), H = out.center_heatmap.h(), W = out.center_heatmap.w();
  const double norm = std::max(1, tgt.positive_count());

  DetectionLossResult<T> r;
  r.grad = {Tensor<T>(N, 1, H, W), Tensor<T>(N, 2, H, W), Tensor<T>(N, 2, H, W)};
  double focal = 0, l1_size = 0, l1_off = 0;
  for (int n = 0; n < N; ++n) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double p = out.center_heatmap(n, 0, y, x);
        double g;
        if (tgt.is_positive(n, y, x)) {
          const double q = 1.0 - p;
          focal -= q * q * detail::safe_log(p);
          g = 2.0 * q * detail::safe_log(p) - q * q / std::max(p, detail::kLogFloor);
          for (int c = 0; c < 2; ++c) {
            const double ds = static_cast<double>(out.size_map(n, c, y, x)) - tgt.size(n, c, y, x);
            const double dof = static_cast<double>(out.offset_map(n, c, y, x)) - tgt.offset(n, c, y, x);
            l1_size += std::abs(ds);
            l1_off += std::abs(dof);
            r.grad.size_map(n, c, y, x) = static_cast<T>(weights.size * detail::sign(ds) / norm);
            r.grad.offset_map(n, c, y, x) = static_cast<T>(weights.offset * detail::sign(dof) / norm);
          }
        } else {
          const double neg_w = std::pow(1.0 - static_cast<double>(tgt.heatmap(n, 0, y, x)), 4);
          const double q = 1.0 - p;
          focal -= neg_w * p * p * detail::safe_log(q);
          g = -neg_w * (2.0 * p * detail::safe_log(q) - p * p / std::max(q, detail::kLogFloor));
        }
        r.grad.center_heatmap(n, 0, y, x) = static_cast<T>(g / norm);
      }
    }
  }
  r.record.center = focal / norm;
  r.record.size = l1_size / norm;
  r.record.offset = l1_off / norm;
  r.record.total = r.record.center + weights.size * r.record.size + weights.offset * r.record.offset;
  return r;
}

template <typename T>
DetectionLossRecord detection_loss(const DetectorOutputs<T>& out, const GroundTruthTargets<T>& tgt,
                                   const LossWeights& weights) {
  return detection_loss_with_grad(out, tgt, weights).record;
}

}  // namespace vidalign::detection
