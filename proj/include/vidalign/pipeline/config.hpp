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

// Configuration is a JSON document whose (possibly nested) keys flatten to
// dotted names such as "contrastive.weight". Resolution order: built-in
// defaults, then the file, then command-line overrides.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidalign/core/error.hpp"
#include "vidalign/dataset/synth.hpp"

namespace vidalign::pipeline {

struct ModelArch {
  std::array<int, 4> backbone_widths{16, 32, 64, 128};
  int fusion_width = 32;
  int head_width = 32;

  friend bool operator==(const ModelArch&, const ModelArch&) = default;
};

/// Per-module ablation switches.
struct ModuleSwitches {
  bool fta = true;
  bool adaptive_weight = true;
  bool bda = true;
  bool cbcl = true;

  bool any() const { return fta || bda || cbcl; }
};

struct AugmentOptions {
  bool enabled = true;
  double flip_prob = 0.5;
  double rotate_prob = 0.5;
  double crop_min_scale = 0.85;
};

struct OptimOptions {
  double lr = 1e-4;
  double lr_min = 1e-5;
  double weight_decay = 5e-4;
  int epochs = 64;
  int batch_size = 32;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  ModelArch model;
  ModuleSwitches modules;
  double size_weight = 0.1;
  double offset_weight = 1.0;
  double contrastive_weight = 0.3;
  double contrastive_temperature = 0.07;
  double fta_confidence_threshold = 0.6;
  int input_height = 64;
  int input_width = 64;
  AugmentOptions augment;
  OptimOptions optim;
  double inference_score_threshold = 0.3;
  int inference_max_detections = 16;
  std::string eval_criterion = "center_in_box";
  double eval_iou_threshold = 0.5;
  double eval_score_threshold = 0.3;
  std::string data_root;
  std::string data_detections;
  std::string model_checkpoint;
  int fps_warmup = 2;
  int fps_repeats = 3;
  int analysis_window = 10;
  double analysis_slow_above = 0.9;
  double analysis_fast_at_most = 0.7;
  dataset::SynthesisParams synth;
  int synth_num_sequences = 8;
  std::string synth_id_prefix = "seq";
};

namespace detail {

/// Calls `f(key, field)` for every configurable field.
template <typename Config, typename F>
void visit_keys(Config& c, F&& f) {
  f("seed", c.seed);
  f("model.backbone_widths", c.model.backbone_widths);
  f("model.fusion_width", c.model.fusion_width);
  f("model.head_width", c.model.head_width);
  f("model.checkpoint", c.model_checkpoint);
  f("modules.fta", c.modules.fta);
  f("modules.adaptive_weight", c.modules.adaptive_weight);
  f("modules.bda", c.modules.bda);
  f("modules.cbcl", c.modules.cbcl);
  f("loss.size_weight", c.size_weight);
  f("loss.offset_weight", c.offset_weight);
  f("contrastive.weight", c.contrastive_weight);
  f("contrastive.temperature", c.contrastive_temperature);
  f("fta.confidence_threshold", c.fta_confidence_threshold);
  f("input.height", c.input_height);
  f("input.width", c.input_width);
  f("augment.enabled", c.augment.enabled);
  f("augment.flip_prob", c.augment.flip_prob);
  f("augment.rotate_prob", c.augment.rotate_prob);
  f("augment.crop_min_scale", c.augment.crop_min_scale);
  f("optim.lr", c.optim.lr);
  f("optim.lr_min", c.optim.lr_min);
  f("optim.weight_decay", c.optim.weight_decay);
  f("optim.epochs", c.optim.epochs);
  f("optim.batch_size", c.optim.batch_size);
  f("inference.score_threshold", c.inference_score_threshold);
  f("inference.max_detections", c.inference_max_detections);
  f("eval.criterion", c.eval_criterion);
  f("eval.iou_threshold", c.eval_iou_threshold);
  f("eval.score_threshold", c.eval_score_threshold);
  f("data.root", c.data_root);
  f("data.detections", c.data_detections);
  f("fps.warmup", c.fps_warmup);
  f("fps.repeats", c.fps_repeats);
  f("analysis.window", c.analysis_window);
  f("analysis.slow_above", c.analysis_slow_above);
  f("analysis.fast_at_most", c.analysis_fast_at_most);
  f("synth.num_sequences", c.synth_num_sequences);
  f("synth.id_prefix", c.synth_id_prefix);
  f("synth.height", c.synth.height);
  f("synth.width", c.synth.width);
  f("synth.num_frames", c.synth.num_frames);
  f("synth.targets_min", c.synth.targets_min);
  f("synth.targets_max", c.synth.targets_max);
  f("synth.radius_min", c.synth.radius_min);
  f("synth.radius_max", c.synth.radius_max);
  f("synth.contrast", c.synth.contrast);
  f("synth.velocity_min", c.synth.velocity_min);
  f("synth.velocity_max", c.synth.velocity_max);
  f("synth.random_direction", c.synth.random_direction);
  f("synth.jitter", c.synth.jitter);
  f("synth.blur", c.synth.blur);
  f("synth.specular", c.synth.specular);
  f("synth.occlusion", c.synth.occlusion);
  f("synth.concealed", c.synth.concealed);
  f("synth.concealed_contrast", c.synth.concealed_contrast);
}

inline void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, nlohmann::json>& out) {
  if (j.is_object() && !j.empty()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (!prefix.empty()) {
    out[prefix] = j;
  }
}

inline void assign(const std::string& key, const nlohmann::json& v, bool& field) {
  if (!v.is_boolean()) throw ConfigError("config key '" + key + "': expected a boolean");
  field = v.get<bool>();
}

inline void assign(const std::string& key, const nlohmann::json& v, int& field) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "': expected an integer");
  field = v.get<int>();
}

inline void assign(const std::string& key, const nlohmann::json& v, std::uint64_t& field) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
    throw ConfigError("config key '" + key + "': expected a non-negative integer");
  field = v.get<std::uint64_t>();
}

inline void assign(const std::string& key, const nlohmann::json& v, double& field) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "': expected a number");
  field = v.get<double>();
}

inline void assign(const std::string& key, const nlohmann::json& v, std::string& field) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "': expected a string");
  field = v.get<std::string>();
}

inline void assign(const std::string& key, const nlohmann::json& v, std::array<int, 4>& field) {
  if (!v.is_array() || v.size() != 4) throw ConfigError("config key '" + key + "': expected an array of 4 integers");
  for (int i = 0; i < 4; ++i) {
    if (!v[i].is_number_integer()) throw ConfigError("config key '" + key + "': expected an array of 4 integers");
    field[i] = v[i].get<int>();
  }
}

template <typename Field>
nlohmann::json to_json_value(const Field& f) {
  return nlohmann::json(f);
}

}  // namespace detail

/// Every valid dotted key, in declaration order.
inline std::vector<std::string> config_keys() {
  PipelineConfig c;
  std::vector<std::string> keys;
  detail::visit_keys(c, [&](const char* k, auto&) { keys.emplace_back(k); });
  return keys;
}

inline void validate(const PipelineConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) { throw ConfigError("config key '" + key + "': " + why); };
  if (c.size_weight < 0) fail("loss.size_weight", "must be >= 0");
  if (c.offset_weight < 0) fail("loss.offset_weight", "must be >= 0");
  if (c.contrastive_weight < 0) fail("contrastive.weight", "must be >= 0");
  if (!(c.contrastive_temperature > 0)) fail("contrastive.temperature", "must be > 0");
  if (c.fta_confidence_threshold < 0 || c.fta_confidence_threshold > 1) fail("fta.confidence_threshold", "must lie in [0,1]");
  if (c.input_height <= 0 || c.input_height % 16 != 0) fail("input.height", "must be a positive multiple of 16");
  if (c.input_width <= 0 || c.input_width % 16 != 0) fail("input.width", "must be a positive multiple of 16");
  for (int w : c.model.backbone_widths)
    if (w <= 0) fail("model.backbone_widths", "widths must be positive");
  if (c.model.fusion_width <= 0) fail("model.fusion_width", "must be positive");
  if (c.model.head_width <= 0) fail("model.head_width", "must be positive");
  if (c.optim.epochs < 0) fail("optim.epochs", "must be >= 0");
  if (c.optim.batch_size <= 0) fail("optim.batch_size", "must be positive");
  if (c.optim.lr <= 0 || c.optim.lr_min < 0) fail("optim.lr", "learning rates must be positive");
  if (c.eval_criterion != "center_in_box" && c.eval_criterion != "iou")
    fail("eval.criterion", "must be 'center_in_box' or 'iou'");
  if (c.inference_score_threshold < 0 || c.inference_score_threshold > 1) fail("inference.score_threshold", "must lie in [0,1]");
  if (c.analysis_window < 1) fail("analysis.window", "must be >= 1");
  if (c.fps_warmup < 1) fail("fps.warmup", "must be >= 1");
  if (c.fps_repeats < 3) fail("fps.repeats", "must be >= 3");
}

/// Apply flattened key/value pairs; unknown keys are rejected by name.
inline void apply(PipelineConfig& c, const std::map<std::string, nlohmann::json>& values) {
  for (const auto& [key, value] : values) {
    bool found = false;
    detail::visit_keys(c, [&](const char* k, auto& field) {
      if (key == k) {
        detail::assign(key, value, field);
        found = true;
      }
    });
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
}

/// Parse "key=value". The value is read as JSON when it parses, else as a string.
inline std::pair<std::string, nlohmann::json> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not of the form key=value");
  const std::string key = text.substr(0, eq), raw = text.substr(eq + 1);
  nlohmann::json v = nlohmann::json::parse(raw, nullptr, false);
  if (v.is_discarded()) v = raw;
  return {key, v};
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  PipelineConfig copy = c;
  detail::visit_keys(copy, [&](const char* k, auto& field) {
    std::string pointer = std::string("/") + k;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    j[nlohmann::json::json_pointer(pointer)] = detail::to_json_value(field);
  });
  return j;
}

inline PipelineConfig from_json(const nlohmann::json& j) {
  PipelineConfig c;
  std::map<std::string, nlohmann::json> flat;
  detail::flatten(j, "", flat);
  pipeline::apply(c, flat);
  validate(c);
  c.synth.seed = c.seed;
  return c;
}

/// defaults -> file -> overrides. An empty or whitespace-only file means
/// "no keys". A missing path is an error.
inline PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  PipelineConfig c;
  std::map<std::string, nlohmann::json> flat;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
      }
      if (!j.is_object()) throw ConfigError("config file '" + path.string() + "' must hold a JSON object");
      detail::flatten(j, "", flat);
    }
  }
  pipeline::apply(c, flat);
  std::map<std::string, nlohmann::json> over;
  for (const auto& o : overrides) {
    auto [k, v] = parse_override(o);
    over[k] = v;
  }
  pipeline::apply(c, over);
  validate(c);
  c.synth.seed = c.seed;
  return c;
}

}  // namespace vidalign::pipeline
