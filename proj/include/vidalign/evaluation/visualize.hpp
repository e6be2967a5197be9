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

#include <cmath>
#include <cstdio>
#include <span>

#include "vidalign/dataset/image.hpp"
#include "vidalign/evaluation/match.hpp"

namespace vidalign::evaluation {

inline constexpr dataset::Color kGroundTruthColor{255, 255, 0};
inline constexpr dataset::Color kTruePositiveColor{0, 255, 0};
inline constexpr dataset::Color kFalsePositiveColor{255, 0, 0};

namespace detail {

inline void outline(dataset::Image& img, const Box& b, const dataset::Color& color) {
  dataset::draw_rect(img, static_cast<int>(std::floor(b.x1)), static_cast<int>(std::floor(b.y1)),
                     static_cast<int>(std::ceil(b.x2)), static_cast<int>(std::ceil(b.y2)), color, 1);
}

}  // namespace detail

/// Overlay: ground truth yellow, matched predictions green, unmatched red,
/// each prediction's score printed above its box. Drawn at `scale` times the
/// frame size (nearest neighbour) so the score digits stay legible.
inline dataset::Image render_overlay(const dataset::Image& frame, std::span<const Box> gts,
                                     std::span<const Detection> preds, const MatchResult& match, int scale = 4) {
  if (match.matched_gt.size() != preds.size()) throw ValueError("render_overlay: match result does not fit predictions");
  dataset::Image img(frame.height * scale, frame.width * scale);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = frame.at(y / scale, x / scale, c);
  auto scaled = [scale](const Box& b) { return Box{b.x1 * scale, b.y1 * scale, b.x2 * scale, b.y2 * scale}; };
  for (const auto& g : gts) detail::outline(img, scaled(g), kGroundTruthColor);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto color = match.matched(i) ? kTruePositiveColor : kFalsePositiveColor;
    const Box b = scaled(preds[i].box());
    detail::outline(img, b, color);
    char text[16];
    std::snprintf(text, sizeof(text), "%.2f", preds[i].score);
    dataset::draw_text(img, std::max(0, static_cast<int>(b.x1)), std::max(0, static_cast<int>(b.y1) - 7), text, color, 1);
  }
  return img;
}

inline void visualize(const dataset::Image& frame, std::span<const Box> gts, std::span<const Detection> preds,
                      const MatchResult& match, const std::filesystem::path& path, int scale = 4) {
  dataset::write_png(render_overlay(frame, gts, preds, match, scale), path);
}

}  // namespace vidalign::evaluation
