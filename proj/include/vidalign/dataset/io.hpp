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

// On-disk layout:
//   <root>/<sequence_id>/frames/%06d.png      8-bit RGB
//   <root>/<sequence_id>/annotations.jsonl    one line per frame:
//     {"frame": 0, "boxes": [{"track": 0, "x1": 3, "y1": 4, "x2": 19, "y2": 20}]}

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidalign/dataset/sequence.hpp"

namespace vidalign::dataset {

namespace fs = std::filesystem;

inline std::string frame_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.png", index);
  return buf;
}

inline void save_sequence(VideoSequence& seq, const fs::path& root) {
  const fs::path dir = root / seq.id;
  fs::create_directories(dir / "frames");
  seq.frame_files.clear();
  for (int f = 0; f < seq.size(); ++f) {
    const fs::path p = dir / "frames" / frame_filename(f);
    write_png(seq.frames[f], p);
    seq.frame_files.push_back(p);
  }
  std::ofstream out(dir / "annotations.jsonl");
  if (!out) throw DataError("cannot write annotations under '" + dir.string() + "'");
  for (int f = 0; f < seq.size(); ++f) {
    nlohmann::json line;
    line["frame"] = f;
    line["boxes"] = nlohmann::json::array();
    for (const auto& tb : seq.annotations[f])
      line["boxes"].push_back({{"track", tb.track},
                               {"x1", static_cast<long>(tb.box.x1)},
                               {"y1", static_cast<long>(tb.box.y1)},
                               {"x2", static_cast<long>(tb.box.x2)},
                               {"y2", static_cast<long>(tb.box.y2)}});
    out << line.dump() << '\n';
  }
}

namespace detail {

inline long require_int(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_number_integer())
    throw DataError(where + ": missing or non-integer field '" + key + "'");
  return obj.at(key).get<long>();
}

}  // namespace detail

/// Loads and validates `<root>/<id>`: contiguous frame indices, every box
/// inside the image with positive area, every referenced frame present.
inline VideoSequence load_sequence(const fs::path& root, const std::string& id) {
  const fs::path dir = root / id;
  const fs::path ann = dir / "annotations.jsonl";
  std::ifstream in(ann);
  if (!in) throw DataError("cannot open '" + ann.string() + "'");
  VideoSequence seq;
  seq.id = id;
  std::string text;
  int line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = ann.string() + ":" + std::to_string(line_no);
    nlohmann::json line;
    try {
      line = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!line.is_object()) throw DataError(where + ": expected a JSON object");
    const long frame = detail::require_int(line, "frame", where);
    if (frame != static_cast<long>(seq.annotations.size()))
      throw DataError(where + ": expected frame " + std::to_string(seq.annotations.size()) + ", found " +
                      std::to_string(frame));
    if (!line.contains("boxes") || !line["boxes"].is_array()) throw DataError(where + ": missing 'boxes' array");
    std::vector<TrackBox> boxes;
    for (const auto& b : line["boxes"]) {
      if (!b.is_object()) throw DataError(where + ": box entry is not an object");
      TrackBox tb;
      tb.track = static_cast<int>(detail::require_int(b, "track", where));
      tb.box = {static_cast<double>(detail::require_int(b, "x1", where)),
                static_cast<double>(detail::require_int(b, "y1", where)),
                static_cast<double>(detail::require_int(b, "x2", where)),
                static_cast<double>(detail::require_int(b, "y2", where))};
      if (!(tb.box.x2 > tb.box.x1) || !(tb.box.y2 > tb.box.y1)) throw DataError(where + ": box with non-positive area");
      boxes.push_back(tb);
    }
    seq.annotations.push_back(std::move(boxes));

    const fs::path img_path = dir / "frames" / frame_filename(static_cast<int>(frame));
    if (!fs::exists(img_path)) throw DataError(where + ": frame file '" + img_path.string() + "' is missing");
    seq.frames.push_back(read_png(img_path));
    seq.frame_files.push_back(img_path);
    const auto& img = seq.frames.back();
    for (const auto& tb : seq.annotations.back())
      if (tb.box.x1 < 0 || tb.box.y1 < 0 || tb.box.x2 > img.width || tb.box.y2 > img.height)
        throw DataError(where + ": box outside the " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                        " image");
  }
  return seq;
}

/// Sequence directories under `root` (those holding annotations.jsonl), sorted.
inline std::vector<std::string> list_sequences(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("dataset root '" + root.string() + "' is not a directory");
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "annotations.jsonl")) ids.push_back(e.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::vector<VideoSequence> load_dataset(const fs::path& root) {
  std::vector<VideoSequence> out;
  for (const auto& id : list_sequences(root)) out.push_back(load_sequence(root, id));
  return out;
}

}  // namespace vidalign::dataset
