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
#include <vector>

#include "vidalign/core/box.hpp"
#include "vidalign/detection/heads.hpp"

namespace vidalign::detection {

/// Smallest decoded extent in pixels; keeps w, h strictly positive.
inline constexpr double kMinExtent = 1e-3;

/// Decode one sample: 3x3 local maxima (ties kept), top `max_k` by score with
/// row-major order among equal scores, then drop scores below `threshold`.
template <typename T>
std::vector<Detection> decode_detections(const DetectorOutputs<T>& out, int sample, int stride, int max_k,
                                         double threshold) {
  if (threshold < 0.0 || threshold > 1.0) throw ValueError("decode_detections: threshold outside [0,1]");
  const auto& heat = out.center_heatmap;
  const int H = heat.h(), W = heat.w();
  struct Peak {
    double score;
    int y, x;
  };
  std::vector<Peak> peaks;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const T v = heat(sample, 0, y, x);
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
          if (heat(sample, 0, yy, xx) > v) {
            is_max = false;
            break;
          }
        }
      if (is_max) peaks.push_back({static_cast<double>(v), y, x});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
  if (max_k >= 0 && static_cast<int>(peaks.size()) > max_k) peaks.resize(max_k);

  std::vector<Detection> dets;
  for (const auto& p : peaks) {
    if (p.score < threshold) continue;
    Detection d;
    d.cx = (p.x + static_cast<double>(out.offset_map(sample, 0, p.y, p.x))) * stride;
    d.cy = (p.y + static_cast<double>(out.offset_map(sample, 1, p.y, p.x))) * stride;
    d.w = std::max(static_cast<double>(out.size_map(sample, 0, p.y, p.x)) * stride, kMinExtent);
    d.h = std::max(static_cast<double>(out.size_map(sample, 1, p.y, p.x)) * stride, kMinExtent);
    d.score = p.score;
    dets.push_back(d);
  }
  return dets;
}

}  // namespace vidalign::detection
