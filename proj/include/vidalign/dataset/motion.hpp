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

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vidalign/dataset/sequence.hpp"

namespace vidalign::dataset {

struct MotionScore {
  int track = 0;
  int frame = 0;
  double motion_iou = 0;
};

/// For every (track, frame), the mean IoU of the track's box against its own
/// boxes at offsets d in [-window, window], d != 0, over frames where the
/// track exists. Tracks seen in fewer than two frames yield no score.
inline std::vector<MotionScore> motion_iou(const VideoSequence& seq, int window = 10) {
  if (window < 1) throw ValueError("motion_iou: window must be >= 1");
  std::map<int, std::map<int, Box>> tracks;  // track -> frame -> box
  for (int f = 0; f < static_cast<int>(seq.annotations.size()); ++f)
    for (const auto& tb : seq.annotations[f]) tracks[tb.track][f] = tb.box;

  std::vector<MotionScore> out;
  for (const auto& [track, frames] : tracks) {
    if (frames.size() < 2) continue;
    for (const auto& [f, box] : frames) {
      double sum = 0;
      int count = 0;
      for (auto it = frames.lower_bound(f - window); it != frames.end() && it->first <= f + window; ++it) {
        if (it->first == f) continue;
        sum += iou(box, it->second);
        ++count;
      }
      if (count > 0) out.push_back({track, f, sum / count});
    }
  }
  return out;
}

struct SpeedBins {
  double slow_above = 0.9;   // score > slow_above is slow
  double fast_at_most = 0.7; // score <= fast_at_most is fast
};

struct SpeedHistogram {
  double slow = 0;
  double medium = 0;
  double fast = 0;
  int count = 0;
};

inline SpeedHistogram speed_histogram(std::span<const double> scores, const SpeedBins& bins = {}) {
  SpeedHistogram h;
  int slow = 0, medium = 0, fast = 0;
  for (double s : scores) {
    if (s > bins.slow_above)
      ++slow;
    else if (s > bins.fast_at_most)
      ++medium;
    else
      ++fast;
  }
  h.count = static_cast<int>(scores.size());
  if (h.count == 0) return h;
  h.slow = static_cast<double>(slow) / h.count;
  h.medium = static_cast<double>(medium) / h.count;
  h.fast = static_cast<double>(fast) / h.count;
  return h;
}

inline SpeedHistogram speed_histogram(std::span<const MotionScore> scores, const SpeedBins& bins = {}) {
  std::vector<double> v;
  v.reserve(scores.size());
  for (const auto& s : scores) v.push_back(s.motion_iou);
  return speed_histogram(std::span<const double>(v), bins);
}

inline double mean_motion_iou(std::span<const MotionScore> scores) {
  if (scores.empty()) return 0.0;
  double s = 0;
  for (const auto& m : scores) s += m.motion_iou;
  return s / static_cast<double>(scores.size());
}

/// Bar chart of the three proportions (slow, medium, fast).
inline Image plot_speed_histogram(const SpeedHistogram& h, int height = 120, int width = 150) {
  Image img(height, width, 255);
  const std::array<double, 3> values{h.slow, h.medium, h.fast};
  const std::array<Color, 3> colors{{{70, 160, 90}, {230, 170, 40}, {200, 60, 50}}};
  const std::array<const char*, 3> labels{"S", "M", "F"};
  const int base = height - 14, top = 16, slot = width / 3;
  for (int i = 0; i < 3; ++i) {
    const int bar_h = static_cast<int>(std::lround(values[i] * (base - top)));
    const int x1 = i * slot + slot / 5, x2 = (i + 1) * slot - slot / 5;
    fill_rect(img, x1, base - bar_h, x2, base, colors[i]);
    draw_text(img, (x1 + x2) / 2 - 2, base + 4, labels[i], {0, 0, 0}, 1);
    draw_text(img, x1, std::max(0, base - bar_h - 8), std::to_string(std::lround(values[i] * 100)) + "%", {0, 0, 0}, 1);
  }
  fill_rect(img, 0, base, width, base + 1, {0, 0, 0});
  return img;
}

}  // namespace vidalign::dataset
