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
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vidalign/dataset/sequence.hpp"

namespace vidalign::dataset {

/// Everything that shapes a synthetic clip. The seed fixes every pixel.
struct SynthesisParams {
  int height = 64;
  int width = 64;
  int num_frames = 30;
  int targets_min = 1;
  int targets_max = 1;
  int radius_min = 6;  // ellipse semi-axes in pixels
  int radius_max = 10;
  double contrast = 0.35;            // relative brightness of targets over the background
  double velocity_min = 0.0;         // px/frame
  double velocity_max = 2.0;
  bool random_direction = true;      // otherwise every target moves along +x
  int jitter = 2;                    // camera shake amplitude in px
  bool blur = false;
  int specular = 0;                  // highlight blobs per frame
  bool occlusion = false;
  bool concealed = false;
  double concealed_contrast = 0.08;
  std::uint64_t seed = 0;
};

inline void validate(const SynthesisParams& p) {
  if (p.height <= 0 || p.width <= 0 || p.num_frames <= 0) throw ValueError("synthesis: image size and frame count must be positive");
  if (p.targets_min < 0 || p.targets_max < p.targets_min) throw ValueError("synthesis: invalid target count range");
  if (p.radius_min < 1 || p.radius_max < p.radius_min) throw ValueError("synthesis: invalid target size range");
  if (2 * (p.radius_max + p.jitter) >= std::min(p.height, p.width))
    throw ValueError("synthesis: target larger than image (radius_max " + std::to_string(p.radius_max) + ", image " +
                     std::to_string(p.width) + "x" + std::to_string(p.height) + ")");
  if (p.velocity_min < 0 || p.velocity_max < p.velocity_min) throw ValueError("synthesis: invalid velocity range");
  if (p.jitter < 0) throw ValueError("synthesis: jitter must be non-negative");
}

namespace detail {

struct Target {
  double cx, cy;  // world coordinates of the center
  double vx, vy;
  int rx, ry;
  double gain;    // brightness multiplier
};

struct Wave {
  double fy, fx, phase, amp;
};

}  // namespace detail

/// Textured background under camera shake with elliptical targets moving at
/// constant velocity (reflecting at the borders). Boxes are exact integer
/// extents of the drawn ellipses, clipped to the frame.
inline VideoSequence generate_sequence(const SynthesisParams& p, const std::string& id = "seq") {
  validate(p);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  const int J = p.jitter;
  const int CH = p.height + 2 * J, CW = p.width + 2 * J;

  // Background canvas: base tissue color, low-frequency waves, fixed grain.
  const std::array<double, 3> base{uniform(150, 190), uniform(80, 110), uniform(70, 100)};
  std::vector<detail::Wave> waves;
  for (int i = 0; i < 4; ++i)
    waves.push_back({uniform(0.02, 0.15), uniform(0.02, 0.15), uniform(0, 2 * std::numbers::pi), uniform(8, 22)});
  std::vector<double> canvas(static_cast<std::size_t>(CH) * CW * 3);
  for (int y = 0; y < CH; ++y)
    for (int x = 0; x < CW; ++x) {
      double shade = 0;
      for (const auto& w : waves) shade += w.amp * std::sin(w.fy * y + w.fx * x + w.phase);
      const double grain = uniform(-6, 6);
      for (int c = 0; c < 3; ++c)
        canvas[(static_cast<std::size_t>(y) * CW + x) * 3 + c] = base[c] + shade * (c == 0 ? 1.0 : 0.7) + grain;
    }

  const double contrast = p.concealed ? p.concealed_contrast : p.contrast;
  std::vector<detail::Target> targets;
  const int count = uniform_int(p.targets_min, p.targets_max);
  for (int i = 0; i < count; ++i) {
    detail::Target t;
    t.rx = uniform_int(p.radius_min, p.radius_max);
    t.ry = uniform_int(p.radius_min, p.radius_max);
    t.cx = uniform_int(t.rx + J + 1, p.width - t.rx - J - 1);
    t.cy = uniform_int(t.ry + J + 1, p.height - t.ry - J - 1);
    const double speed = uniform(p.velocity_min, p.velocity_max);
    const double angle = p.random_direction ? uniform(0, 2 * std::numbers::pi) : 0.0;
    t.vx = speed * std::cos(angle);
    t.vy = p.random_direction ? speed * std::sin(angle) : 0.0;
    t.gain = 1.0 + contrast * uniform(0.8, 1.2);
    targets.push_back(t);
  }

  VideoSequence seq;
  seq.id = id;
  for (int f = 0; f < p.num_frames; ++f) {
    const int jx = J > 0 ? uniform_int(-J, J) : 0;
    const int jy = J > 0 ? uniform_int(-J, J) : 0;
    std::vector<double> frame(static_cast<std::size_t>(p.height) * p.width * 3);
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x)
        for (int c = 0; c < 3; ++c)
          frame[(static_cast<std::size_t>(y) * p.width + x) * 3 + c] =
              canvas[(static_cast<std::size_t>(y + J + jy) * CW + (x + J + jx)) * 3 + c];

    std::vector<TrackBox> boxes;
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
      const auto& t = targets[ti];
      const double sx = t.cx + jx, sy = t.cy + jy;
      for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
          const double dx = (x + 0.5 - sx) / t.rx, dy = (y + 0.5 - sy) / t.ry;
          const double d2 = dx * dx + dy * dy;
          if (d2 > 1.0) continue;
          const double gain = t.gain * (1.0 + 0.12 * (1.0 - d2));
          for (int c = 0; c < 3; ++c) {
            auto& v = frame[(static_cast<std::size_t>(y) * p.width + x) * 3 + c];
            v = std::min(255.0, v * gain);
          }
        }
      Box b{std::round(sx - t.rx), std::round(sy - t.ry), std::round(sx + t.rx), std::round(sy + t.ry)};
      b.x1 = std::clamp(b.x1, 0.0, static_cast<double>(p.width));
      b.x2 = std::clamp(b.x2, 0.0, static_cast<double>(p.width));
      b.y1 = std::clamp(b.y1, 0.0, static_cast<double>(p.height));
      b.y2 = std::clamp(b.y2, 0.0, static_cast<double>(p.height));
      if (b.area() > 0) boxes.push_back({static_cast<int>(ti), b});
    }

    for (int s = 0; s < p.specular; ++s) {
      const double hx = uniform(0, p.width), hy = uniform(0, p.height), hr = uniform(1.0, 2.5);
      for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
          const double d2 = ((x + 0.5 - hx) * (x + 0.5 - hx) + (y + 0.5 - hy) * (y + 0.5 - hy)) / (hr * hr);
          if (d2 > 1.0) continue;
          for (int c = 0; c < 3; ++c) {
            auto& v = frame[(static_cast<std::size_t>(y) * p.width + x) * 3 + c];
            v = v + (250.0 - v) * (1.0 - d2);
          }
        }
    }

    if (p.occlusion) {
      const int bar_w = std::max(2, p.width / 16);
      const int x0 = (f * 3) % (p.width + bar_w) - bar_w;
      for (int y = 0; y < p.height; ++y)
        for (int x = std::max(0, x0); x < std::min(p.width, x0 + bar_w); ++x)
          for (int c = 0; c < 3; ++c) frame[(static_cast<std::size_t>(y) * p.width + x) * 3 + c] *= 0.35;
    }

    if (p.blur) {
      std::vector<double> blurred(frame.size());
      for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x)
          for (int c = 0; c < 3; ++c) {
            double acc = 0;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                const int yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= p.height || xx < 0 || xx >= p.width) continue;
                acc += frame[(static_cast<std::size_t>(yy) * p.width + xx) * 3 + c];
                ++n;
              }
            blurred[(static_cast<std::size_t>(y) * p.width + x) * 3 + c] = acc / n;
          }
      frame.swap(blurred);
    }

    Image img(p.height, p.width);
    for (std::size_t i = 0; i < frame.size(); ++i)
      img.rgb[i] = static_cast<std::uint8_t>(std::clamp(std::lround(frame[i]), 0L, 255L));
    seq.frames.push_back(std::move(img));
    seq.annotations.push_back(std::move(boxes));

    for (auto& t : targets) {
      if (t.cx + t.vx - t.rx < 0 || t.cx + t.vx + t.rx > p.width) t.vx = -t.vx;
      if (t.cy + t.vy - t.ry < 0 || t.cy + t.vy + t.ry > p.height) t.vy = -t.vy;
      t.cx += t.vx;
      t.cy += t.vy;
    }
  }
  return seq;
}

/// `count` clips named prefix000, prefix001, ...; clip i uses seed + i.
inline std::vector<VideoSequence> generate_dataset(const SynthesisParams& p, int count, const std::string& prefix = "seq") {
  if (count < 0) throw ValueError("synthesis: negative sequence count");
  std::vector<VideoSequence> out;
  for (int i = 0; i < count; ++i) {
    SynthesisParams q = p;
    q.seed = p.seed + static_cast<std::uint64_t>(i);
    char id[16];
    std::snprintf(id, sizeof(id), "%03d", i);
    out.push_back(generate_sequence(q, prefix + id));
  }
  return out;
}

}  // namespace vidalign::dataset
