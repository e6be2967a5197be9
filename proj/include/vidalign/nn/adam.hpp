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

#include <cmath>
#include <numbers>
#include <vector>

#include "vidalign/nn/parameter.hpp"

namespace vidalign::nn {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;  // L2 term added to the gradient
};

/// Cosine annealing from `lr_max` at epoch 0 to `lr_min` at `total_epochs`.
inline double cosine_lr(double lr_max, double lr_min, int epoch, int total_epochs) {
  if (total_epochs <= 1) return lr_max;
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

template <typename T>
class Adam {
 public:
  explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

  void set_lr(double lr) { opts_.lr = lr; }
  double lr() const { return opts_.lr; }
  long steps() const { return t_; }

  void step(ParameterRefs<T>& params) {
    if (m_.size() != params.size()) {
      m_.assign(params.size(), {});
      v_.assign(params.size(), {});
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i].get().size(), 0.0);
        v_[i].assign(params[i].get().size(), 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i].get();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double g = static_cast<double>(p.grad[j]) + opts_.weight_decay * static_cast<double>(p.value[j]);
        m[j] = opts_.beta1 * m[j] + (1.0 - opts_.beta1) * g;
        v[j] = opts_.beta2 * v[j] + (1.0 - opts_.beta2) * g * g;
        const double update = opts_.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + opts_.eps);
        p.value[j] = static_cast<T>(static_cast<double>(p.value[j]) - update);
      }
    }
  }

 private:
  AdamOptions opts_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace vidalign::nn
