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
#include "vidalign/detection/targets.hpp"

namespace vidalign::alignment {

using detection::Grid;

enum class MaskSource { ground_truth, detected, absent };

/// Feature-resolution {0,1} foreground map.
struct BinaryMask {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> data;
  MaskSource source = MaskSource::absent;

  BinaryMask() = default;
  BinaryMask(int height, int width, MaskSource src)
      : h(height), w(width), data(static_cast<std::size_t>(height) * width, 0), source(src) {}

  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * w + x]; }
  int count(std::uint8_t value = 1) const { return static_cast<int>(std::count(data.begin(), data.end(), value)); }
  bool usable() const { return source != MaskSource::absent && count(1) > 0; }
};

/// Mark cells whose centers fall inside any box. A box too small to cover a
/// cell center marks the cell containing its own center instead. No boxes
/// yields an absent mask.
inline BinaryMask rasterize_boxes(std::span<const Box> boxes, const Grid& grid, MaskSource source) {
  BinaryMask m(grid.h, grid.w, boxes.empty() ? MaskSource::absent : source);
  const double s = grid.stride;
  for (const auto& b : boxes) {
    bool covered = false;
    for (int y = 0; y < grid.h; ++y) {
      const double py = (y + 0.5) * s;
      if (py < b.y1 || py >= b.y2) continue;
      for (int x = 0; x < grid.w; ++x) {
        const double px = (x + 0.5) * s;
        if (px >= b.x1 && px < b.x2) {
          m.at(y, x) = 1;
          covered = true;
        }
      }
    }
    if (!covered && b.area() > 0.0) {
      const int cx = std::clamp(static_cast<int>(std::floor(b.cx() / s)), 0, grid.w - 1);
      const int cy = std::clamp(static_cast<int>(std::floor(b.cy() / s)), 0, grid.h - 1);
      m.at(cy, cx) = 1;
    }
  }
  return m;
}

inline BinaryMask rasterize_boxes(std::span<const Detection> dets, const Grid& grid, MaskSource source) {
  std::vector<Box> boxes;
  boxes.reserve(dets.size());
  for (const auto& d : dets) boxes.push_back(d.box());
  return rasterize_boxes(std::span<const Box>(boxes), grid, source);
}

}  // namespace vidalign::alignment
