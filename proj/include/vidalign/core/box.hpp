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

namespace vidalign {

/// Axis-aligned box in image pixels, origin top-left, half-open [x1, x2) x [y1, y2).
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }
  bool contains(double x, double y) const { return x >= x1 && x < x2 && y >= y1 && y < y2; }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Center-form box with a confidence score. Ground truth uses score 1.
struct Detection {
  double cx = 0, cy = 0, w = 0, h = 0;
  double score = 1.0;

  Box box() const { return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h}; }
  static Detection from_box(const Box& b, double score = 1.0) {
    return {b.cx(), b.cy(), b.width(), b.height(), score};
  }

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// IoU with degenerate (zero-area) boxes defined as 0.
inline double iou(const Box& a, const Box& b) {
  if (a.area() <= 0.0 || b.area() <= 0.0) return 0.0;
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace vidalign
