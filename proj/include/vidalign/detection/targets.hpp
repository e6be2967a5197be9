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
#include <cstdint>
#include <span>
#include <vector>

#include "vidalign/core/box.hpp"
#include "vidalign/core/tensor.hpp"

namespace vidalign::detection {

/// Feature grid geometry: H x W cells of `stride` image pixels each.
struct Grid {
  int h = 0;
  int w = 0;
  int stride = 1;
};

template <typename T>
struct GroundTruthTargets {
  Tensor<T> heatmap;                   // N x 1 x H x W
  Tensor<T> size;                      // N x 2 x H x W, (w, h) / stride
  Tensor<T> offset;                    // N x 2 x H x W, fractional center remainder
  std::vector<std::uint8_t> positive;  // N x H x W

  bool is_positive(int n, int y, int x) const {
    return positive[(static_cast<std::size_t>(n) * heatmap.h() + y) * heatmap.w() + x] != 0;
  }
  int positive_count() const { return static_cast<int>(std::count(positive.begin(), positive.end(), 1)); }
};

/// Largest Gaussian radius (in cells) such that a box displaced by it still
/// overlaps the original with IoU >= `min_overlap`. Same three-case bound the
/// CenterNet reference implementation uses.
inline double gaussian_radius(double height, double width, double min_overlap = 0.7) {
  const double b1 = height + width;
  const double c1 = width * height * (1 - min_overlap) / (1 + min_overlap);
  const double r1 = (b1 + std::sqrt(b1 * b1 - 4 * c1)) / 2;

  const double a2 = 4;
  const double b2 = 2 * (height + width);
  const double c2 = (1 - min_overlap) * width * height;
  const double r2 = (b2 + std::sqrt(b2 * b2 - 4 * a2 * c2)) / 2;

  const double a3 = 4 * min_overlap;
  const double b3 = -2 * min_overlap * (height + width);
  const double c3 = (min_overlap - 1) * width * height;
  const double r3 = (b3 + std::sqrt(b3 * b3 - 4 * a3 * c3)) / 2;
  return std::min({r1, r2, r3});
}

/// Elementwise-max splat of a (2r+1)^2 Gaussian with sigma = (2r+1)/6.
template <typename T>
void draw_gaussian(Tensor<T>& heatmap, int n, int cy, int cx, int radius) {
  const double sigma = (2.0 * radius + 1.0) / 6.0;
  const int H = heatmap.h(), W = heatmap.w();
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = cy + dy;
    if (y < 0 || y >= H) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx;
      if (x < 0 || x >= W) continue;
      double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      if (g < std::numeric_limits<double>::epsilon()) g = 0.0;
      T& dst = heatmap(n, 0, y, x);
      dst = std::max(dst, static_cast<T>(g));
    }
  }
}

/// Render center/size/offset supervision for a batch. `boxes[n]` holds the
/// ground-truth boxes of sample n in image pixels.
template <typename T>
GroundTruthTargets<T> render_targets(std::span<const std::vector<Detection>> boxes, const Grid& grid,
                                     double min_overlap = 0.7) {
  const int N = static_cast<int>(boxes.size());
  GroundTruthTargets<T> t{Tensor<T>(N, 1, grid.h, grid.w), Tensor<T>(N, 2, grid.h, grid.w),
                          Tensor<T>(N, 2, grid.h, grid.w),
                          std::vector<std::uint8_t>(static_cast<std::size_t>(N) * grid.h * grid.w, 0)};
  const double s = grid.stride;
  for (int n = 0; n < N; ++n) {
    for (const auto& d : boxes[n]) {
      if (!(d.w > 0.0) || !(d.h > 0.0)) throw ValueError("render_targets: zero-area box");
      const double gx = d.cx / s, gy = d.cy / s;
      const int cx = std::clamp(static_cast<int>(std::floor(gx)), 0, grid.w - 1);
      const int cy = std::clamp(static_cast<int>(std::floor(gy)), 0, grid.h - 1);
      const int radius = std::max(0, static_cast<int>(gaussian_radius(d.h / s, d.w / s, min_overlap)));
      draw_gaussian(t.heatmap, n, cy, cx, radius);
      t.heatmap(n, 0, cy, cx) = T(1);
      t.size(n, 0, cy, cx) = static_cast<T>(d.w / s);
      t.size(n, 1, cy, cx) = static_cast<T>(d.h / s);
      t.offset(n, 0, cy, cx) = static_cast<T>(gx - cx);
      t.offset(n, 1, cy, cx) = static_cast<T>(gy - cy);
      t.positive[(static_cast<std::size_t>(n) * grid.h + cy) * grid.w + cx] = 1;
    }
  }
  return t;
}

}  // namespace vidalign::detection
