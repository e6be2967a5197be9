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
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vidalign/core/box.hpp"
#include "vidalign/core/error.hpp"

namespace vidalign::evaluation {

/// One line per frame: {"frame": f, "boxes": [{"x1","y1","x2","y2","score"}]}.
inline void write_detections_jsonl(const std::vector<std::vector<Detection>>& frames, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write detections '" + path.string() + "'");
  for (std::size_t f = 0; f < frames.size(); ++f) {
    nlohmann::json line;
    line["frame"] = f;
    line["boxes"] = nlohmann::json::array();
    for (const auto& d : frames[f]) {
      const Box b = d.box();
      line["boxes"].push_back({{"x1", b.x1}, {"y1", b.y1}, {"x2", b.x2}, {"y2", b.y2}, {"score", d.score}});
    }
    out << line.dump() << '\n';
  }
}

/// Inverse of write_detections_jsonl. Frames must appear in order 0, 1, ...
inline std::vector<std::vector<Detection>> read_detections_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open detections '" + path.string() + "'");
  std::vector<std::vector<Detection>> frames;
  std::string text;
  int line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError(where + ": not a JSON object");
    if (!j.contains("frame") || !j["frame"].is_number_integer() || j["frame"].get<long>() != static_cast<long>(frames.size()))
      throw DataError(where + ": expected frame " + std::to_string(frames.size()));
    if (!j.contains("boxes") || !j["boxes"].is_array()) throw DataError(where + ": missing 'boxes' array");
    std::vector<Detection> dets;
    for (const auto& b : j["boxes"]) {
      for (const char* k : {"x1", "y1", "x2", "y2", "score"})
        if (!b.contains(k) || !b[k].is_number()) throw DataError(where + ": box field '" + k + "' missing or not a number");
      const Box box{b["x1"].get<double>(), b["y1"].get<double>(), b["x2"].get<double>(), b["y2"].get<double>()};
      dets.push_back(Detection::from_box(box, b["score"].get<double>()));
    }
    frames.push_back(std::move(dets));
  }
  return frames;
}

}  // namespace vidalign::evaluation
