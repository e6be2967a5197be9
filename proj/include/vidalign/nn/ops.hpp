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

#include "vidalign/core/tensor.hpp"

namespace vidalign::nn {

template <typename T>
Tensor<T> relu(Tensor<T> x) {
  for (auto& v : x.storage()) v = v > T(0) ? v : T(0);
  return x;
}

/// Gradient through relu given its forward output.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, Tensor<T> gy) {
  y.require_same_shape(gy, "relu_backward");
  for (std::size_t i = 0; i < gy.size(); ++i)
    if (!(y.storage()[i] > T(0))) gy.storage()[i] = T(0);
  return gy;
}

template <typename T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

template <typename T>
Tensor<T> sigmoid(Tensor<T> x) {
  for (auto& v : x.storage()) v = sigmoid(v);
  return x;
}

/// Gradient through the logistic map given its forward output.
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, Tensor<T> gy) {
  y.require_same_shape(gy, "sigmoid_backward");
  for (std::size_t i = 0; i < gy.size(); ++i) {
    const T s = y.storage()[i];
    gy.storage()[i] *= s * (T(1) - s);
  }
  return gy;
}

/// Nearest-neighbour upsampling by an integer factor.
template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor) {
  Tensor<T> y(x.n(), x.c(), x.h() * factor, x.w() * factor);
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int oy = 0; oy < y.h(); ++oy)
        for (int ox = 0; ox < y.w(); ++ox) y(n, c, oy, ox) = x(n, c, oy / factor, ox / factor);
  return y;
}

template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& gy, int factor) {
  Tensor<T> gx(gy.n(), gy.c(), gy.h() / factor, gy.w() / factor);
  for (int n = 0; n < gy.n(); ++n)
    for (int c = 0; c < gy.c(); ++c)
      for (int oy = 0; oy < gy.h(); ++oy)
        for (int ox = 0; ox < gy.w(); ++ox) gx(n, c, oy / factor, ox / factor) += gy(n, c, oy, ox);
  return gx;
}

template <typename T>
Tensor<T> subtract(const Tensor<T>& a, const Tensor<T>& b) {
  a.require_same_shape(b, "subtract");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.storage()[i] -= b.storage()[i];
  return out;
}

template <typename T>
Tensor<T> scaled(Tensor<T> x, T k) {
  for (auto& v : x.storage()) v *= k;
  return x;
}

}  // namespace vidalign::nn
