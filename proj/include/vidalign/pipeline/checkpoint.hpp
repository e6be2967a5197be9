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

// Single-file container, little-endian host layout:
//   magic "VIDALGN\0" | u32 version | u32 dtype bytes | u64 len | config JSON
//   | u32 count | count x { u32 len | name | u32 rank | rank x i32 | values }
//   | u64 FNV-1a of everything before it

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "vidalign/pipeline/model.hpp"

namespace vidalign::pipeline {

inline constexpr char kCheckpointMagic[8] = {'V', 'I', 'D', 'A', 'L', 'G', 'N', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

class ByteWriter {
 public:
  template <typename V>
  void put(const V& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(V));
  }
  void put_raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    bytes.insert(bytes.end(), c, c + n);
  }
  std::vector<char> bytes;
};

class ByteReader {
 public:
  ByteReader(const std::vector<char>& b, std::size_t end) : bytes_(b), end_(end) {}
  template <typename V>
  V get() {
    V v;
    get_raw(&v, sizeof(V));
    return v;
  }
  void get_raw(void* p, std::size_t n) {
    if (pos_ + n > end_) throw CheckpointError("checkpoint truncated");
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

inline bool same_arch(const ModelArch& a, const ModelArch& b) {
  return a.backbone_widths == b.backbone_widths && a.fusion_width == b.fusion_width && a.head_width == b.head_width;
}

inline std::string arch_string(const ModelArch& a) {
  return "widths=[" + std::to_string(a.backbone_widths[0]) + "," + std::to_string(a.backbone_widths[1]) + "," +
         std::to_string(a.backbone_widths[2]) + "," + std::to_string(a.backbone_widths[3]) +
         "] fusion=" + std::to_string(a.fusion_width) + " head=" + std::to_string(a.head_width);
}

}  // namespace detail

/// Write parameters and the full config snapshot (seed included).
template <typename T>
void save_checkpoint(VideoDetector<T>& model, const PipelineConfig& cfg, const std::filesystem::path& path) {
  if (!detail::same_arch(model.arch(), cfg.model))
    throw CheckpointError("save_checkpoint: config architecture differs from the model");
  detail::ByteWriter w;
  w.put_raw(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(sizeof(T)));
  const std::string config = to_json(cfg).dump();
  w.put(static_cast<std::uint64_t>(config.size()));
  w.put_raw(config.data(), config.size());
  const auto params = model.parameters();
  w.put(static_cast<std::uint32_t>(params.size()));
  for (const auto& ref : params) {
    const auto& p = ref.get();
    w.put(static_cast<std::uint32_t>(p.name.size()));
    w.put_raw(p.name.data(), p.name.size());
    w.put(static_cast<std::uint32_t>(p.shape.size()));
    for (int d : p.shape) w.put(static_cast<std::int32_t>(d));
    w.put_raw(p.value.data(), p.value.size() * sizeof(T));
  }
  w.put(detail::fnv1a(w.bytes.data(), w.bytes.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  out.write(w.bytes.data(), static_cast<std::streamsize>(w.bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint '" + path.string() + "'");
}

template <typename T>
struct Checkpoint {
  PipelineConfig config;
  VideoDetector<T> model;
};

/// Read a checkpoint. When `expected` is given, its architecture must match
/// the stored one.
template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path, const ModelArch* expected = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint '" + path.string() + "'";
  if (bytes.size() < sizeof(kCheckpointMagic) + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw CheckpointError(where + " is not a checkpoint file");
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, bytes.data() + body, sizeof(stored_sum));
  if (stored_sum != detail::fnv1a(bytes.data(), body)) throw CheckpointError(where + " is corrupt (checksum mismatch)");

  detail::ByteReader r(bytes, body);
  char magic[sizeof(kCheckpointMagic)];
  r.get_raw(magic, sizeof(magic));
  if (r.get<std::uint32_t>() != kCheckpointVersion) throw CheckpointError(where + " has an unsupported version");
  if (r.get<std::uint32_t>() != sizeof(T)) throw CheckpointError(where + " stores a different scalar type");
  std::string config(r.get<std::uint64_t>(), '\0');
  r.get_raw(config.data(), config.size());

  Checkpoint<T> ck;
  try {
    ck.config = from_json(nlohmann::json::parse(config));
  } catch (const std::exception& e) {
    throw CheckpointError(where + " holds an invalid config: " + e.what());
  }
  if (expected && !detail::same_arch(*expected, ck.config.model))
    throw CheckpointError("architecture mismatch: checkpoint has " + detail::arch_string(ck.config.model) +
                          ", config asks for " + detail::arch_string(*expected));

  ck.model = VideoDetector<T>(ck.config.model);
  auto params = ck.model.parameters();
  if (r.get<std::uint32_t>() != params.size()) throw CheckpointError(where + ": parameter count mismatch");
  for (auto& ref : params) {
    auto& p = ref.get();
    std::string name(r.get<std::uint32_t>(), '\0');
    r.get_raw(name.data(), name.size());
    if (name != p.name) throw CheckpointError(where + ": expected parameter '" + p.name + "', found '" + name + "'");
    std::vector<int> shape(r.get<std::uint32_t>());
    for (auto& d : shape) d = r.get<std::int32_t>();
    if (shape != p.shape) throw CheckpointError(where + ": shape mismatch for parameter '" + name + "'");
    r.get_raw(p.value.data(), p.value.size() * sizeof(T));
  }
  if (r.pos() != body) throw CheckpointError(where + " has trailing bytes");
  return ck;
}

}  // namespace vidalign::pipeline
