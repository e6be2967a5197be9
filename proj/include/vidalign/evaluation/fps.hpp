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

#include <chrono>
#include <cmath>
#include <vector>

#include "vidalign/pipeline/infer.hpp"

namespace vidalign::evaluation {

struct FpsReport {
  double mean = 0;
  double stddev = 0;
  std::vector<double> runs;  // frames per second of each repeat
  int timed_frames = 0;
};

/// Frames per second of sequential inference over in-memory frames. The
/// first `warmup` frames of each repeat run but are not timed.
template <typename T>
FpsReport fps_benchmark(const pipeline::VideoDetector<T>& model, const dataset::VideoSequence& seq,
                        const pipeline::PipelineConfig& cfg, int warmup, int repeats = 3) {
  if (warmup < 1) throw ValueError("fps_benchmark: warmup must be >= 1");
  if (repeats < 3) throw ValueError("fps_benchmark: at least 3 repeats required");
  if (seq.size() <= warmup)
    throw ValueError("fps_benchmark: sequence of " + std::to_string(seq.size()) + " frames is not longer than warmup " +
                     std::to_string(warmup));
  using Clock = std::chrono::steady_clock;
  FpsReport rep;
  rep.timed_frames = seq.size() - warmup;
  for (int r = 0; r < repeats; ++r) {
    pipeline::VideoInference<T> runner(model, cfg);
    for (int f = 0; f < warmup; ++f) runner.step(seq.frames[f]);
    const auto start = Clock::now();
    for (int f = warmup; f < seq.size(); ++f) runner.step(seq.frames[f]);
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    rep.runs.push_back(rep.timed_frames / std::max(seconds, 1e-12));
  }
  double sum = 0;
  for (double v : rep.runs) sum += v;
  rep.mean = sum / repeats;
  double var = 0;
  for (double v : rep.runs) var += (v - rep.mean) * (v - rep.mean);
  rep.stddev = std::sqrt(var / (repeats - 1));
  return rep;
}

}  // namespace vidalign::evaluation
