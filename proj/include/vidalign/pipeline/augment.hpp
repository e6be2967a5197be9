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
#include <random>
#include <vector>

#include "vidalign/dataset/image.hpp"
#include "vidalign/pipeline/config.hpp"

namespace vidalign::pipeline {

using dataset::Image;

/// Anchor (current) frame and its reference (previous) frame with boxes.
struct FramePair {
  Image anchor;
  Image reference;
  std::vector<Box> anchor_boxes;
  std::vector<Box> reference_boxes;
};

/// One geometric transform, applied identically to both frames.
struct AugmentDraw {
  int crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;  // crop_w == 0 means full frame
  int rot90 = 0;                                       // clockwise quarter turns
  bool hflip = false;
  bool vflip = false;
};

namespace detail {

inline Image crop(const Image& src, int x0, int y0, int w, int h) {
  Image out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = src.at(y0 + y, x0 + x, c);
  return out;
}

/// new(y', x') = old(H - 1 - x', y'); output is W x H.
inline Image rotate_cw(const Image& src) {
  Image out(src.width, src.height);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = src.at(src.height - 1 - x, y, c);
  return out;
}

inline Image flip(const Image& src, bool horizontal) {
  Image out(src.height, src.width);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = horizontal ? src.at(y, src.width - 1 - x, c) : src.at(src.height - 1 - y, x, c);
  return out;
}

inline Box rotate_cw(const Box& b, double height) { return {height - b.y2, b.x1, height - b.y1, b.x2}; }
inline Box hflip(const Box& b, double width) { return {width - b.x2, b.y1, width - b.x1, b.y2}; }
inline Box vflip(const Box& b, double height) { return {b.x1, height - b.y2, b.x2, height - b.y1}; }

}  // namespace detail

/// Transform a single frame and its boxes; boxes are clipped to the crop
/// window and dropped when they lose all area.
inline std::pair<Image, std::vector<Box>> apply_transform(const Image& img, const std::vector<Box>& boxes,
                                                          const AugmentDraw& d, int out_h, int out_w) {
  const int cw = d.crop_w > 0 ? d.crop_w : img.width;
  const int ch = d.crop_h > 0 ? d.crop_h : img.height;
  const int cx = d.crop_w > 0 ? d.crop_x : 0;
  const int cy = d.crop_h > 0 ? d.crop_y : 0;
  if (cx < 0 || cy < 0 || cx + cw > img.width || cy + ch > img.height)
    throw ValueError("augment: crop window outside the image");

  const bool quarter = d.rot90 % 2 != 0;
  const int rh = quarter ? out_w : out_h, rw = quarter ? out_h : out_w;  // size before rotation
  Image out = dataset::resize(cx == 0 && cy == 0 && cw == img.width && ch == img.height ? img
                                                                                        : detail::crop(img, cx, cy, cw, ch),
                              rh, rw);
  const double sx = static_cast<double>(rw) / cw, sy = static_cast<double>(rh) / ch;
  std::vector<Box> out_boxes;
  for (const auto& b : boxes) {
    Box c{std::clamp(b.x1 - cx, 0.0, static_cast<double>(cw)), std::clamp(b.y1 - cy, 0.0, static_cast<double>(ch)),
          std::clamp(b.x2 - cx, 0.0, static_cast<double>(cw)), std::clamp(b.y2 - cy, 0.0, static_cast<double>(ch))};
    if (!(c.area() > 0)) continue;
    out_boxes.push_back({c.x1 * sx, c.y1 * sy, c.x2 * sx, c.y2 * sy});
  }
  for (int r = 0; r < ((d.rot90 % 4) + 4) % 4; ++r) {
    const double h = out.height;
    out = detail::rotate_cw(out);
    for (auto& b : out_boxes) b = detail::rotate_cw(b, h);
  }
  if (d.hflip) {
    out = detail::flip(out, true);
    for (auto& b : out_boxes) b = detail::hflip(b, out.width);
  }
  if (d.vflip) {
    out = detail::flip(out, false);
    for (auto& b : out_boxes) b = detail::vflip(b, out.height);
  }
  return {std::move(out), std::move(out_boxes)};
}

inline FramePair apply_transform(const FramePair& pair, const AugmentDraw& d, int out_h, int out_w) {
  if (pair.anchor.height != pair.reference.height || pair.anchor.width != pair.reference.width)
    throw ValueError("augment: anchor and reference sizes differ");
  auto [a, ab] = apply_transform(pair.anchor, pair.anchor_boxes, d, out_h, out_w);
  auto [r, rb] = apply_transform(pair.reference, pair.reference_boxes, d, out_h, out_w);
  return {std::move(a), std::move(r), std::move(ab), std::move(rb)};
}

/// Draw a transform: random crop (scale in [crop_min_scale, 1]), quarter-turn
/// rotation with probability rotate_prob, and independent flips. Quarter
/// turns are restricted to 180 degrees for non-square outputs.
template <typename Rng>
AugmentDraw draw_augmentation(int height, int width, const AugmentOptions& opt, int out_h, int out_w, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentDraw d;
  const double scale = opt.crop_min_scale + (1.0 - opt.crop_min_scale) * unit(rng);
  d.crop_w = std::clamp(static_cast<int>(std::lround(width * scale)), 1, width);
  d.crop_h = std::clamp(static_cast<int>(std::lround(height * scale)), 1, height);
  d.crop_x = std::uniform_int_distribution<int>(0, width - d.crop_w)(rng);
  d.crop_y = std::uniform_int_distribution<int>(0, height - d.crop_h)(rng);
  if (unit(rng) < opt.rotate_prob) d.rot90 = out_h == out_w ? std::uniform_int_distribution<int>(1, 3)(rng) : 2;
  d.hflip = unit(rng) < opt.flip_prob;
  d.vflip = unit(rng) < opt.flip_prob;
  return d;
}

template <typename Rng>
FramePair augment(const FramePair& pair, const AugmentOptions& opt, int out_h, int out_w, Rng& rng) {
  if (!opt.enabled) return apply_transform(pair, AugmentDraw{}, out_h, out_w);
  const auto d = draw_augmentation(pair.anchor.height, pair.anchor.width, opt, out_h, out_w, rng);
  return apply_transform(pair, d, out_h, out_w);
}

}  // namespace vidalign::pipeline
