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
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace vidalign::nn {

using Rng = std::mt19937_64;

/// A named trainable array with its gradient accumulator.
template <typename T>
struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    const auto count = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                       [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
    value.assign(count, T(0));
    grad.assign(count, T(0));
  }

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

/// Zero-mean normal init with standard deviation sqrt(2 / fan_in).
template <typename T>
void he_normal(Parameter<T>& p, int fan_in, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / std::max(1, fan_in)));
  for (auto& v : p.value) v = static_cast<T>(dist(rng));
}

template <typename T>
using ParameterRefs = std::vector<std::reference_wrapper<Parameter<T>>>;

}  // namespace vidalign::nn
