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

#include <filesystem>
#include <string>
#include <vector>

#include "vidalign/core/box.hpp"
#include "vidalign/dataset/image.hpp"

namespace vidalign::dataset {

struct TrackBox {
  int track = 0;
  Box box;  // integer-valued, half-open

  friend bool operator==(const TrackBox&, const TrackBox&) = default;
};

/// Ordered frames with per-frame box annotations. `frame_files` is filled
/// when the sequence was saved to or loaded from disk.
struct VideoSequence {
  std::string id;
  std::vector<Image> frames;
  std::vector<std::vector<TrackBox>> annotations;
  std::vector<std::filesystem::path> frame_files;

  int size() const { return static_cast<int>(frames.size()); }

  std::vector<Box> boxes(int frame) const {
    std::vector<Box> out;
    for (const auto& tb : annotations.at(frame)) out.push_back(tb.box);
    return out;
  }
  std::vector<Detection> ground_truth(int frame) const {
    std::vector<Detection> out;
    for (const auto& tb : annotations.at(frame)) out.push_back(Detection::from_box(tb.box, 1.0));
    return out;
  }
};

}  // namespace vidalign::dataset
