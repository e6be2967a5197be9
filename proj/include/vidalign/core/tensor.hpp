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
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vidalign/core/error.hpp"

namespace vidalign {

/// Dense NCHW array. Owns its storage; copies are deep.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(int n, int c, int h, int w, T fill = T(0)) : shape_{n, c, h, w} {
    if (n < 0 || c < 0 || h < 0 || w < 0) throw ShapeError("negative tensor extent");
    data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
  }

  int n() const { return shape_[0]; }
  int c() const { return shape_[1]; }
  int h() const { return shape_[2]; }
  int w() const { return shape_[3]; }
  const std::array<int, 4>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }
  T& operator()(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  const T& operator()(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  std::size_t sample_size() const { return static_cast<std::size_t>(shape_[1]) * shape_[2] * shape_[3]; }
  std::size_t plane_size() const { return static_cast<std::size_t>(shape_[2]) * shape_[3]; }

  std::span<T> sample(int n) { return {data_.data() + n * sample_size(), sample_size()}; }
  std::span<const T> sample(int n) const { return {data_.data() + n * sample_size(), sample_size()}; }
  std::span<T> plane(int n, int c) { return {data_.data() + index(n, c, 0, 0), plane_size()}; }
  std::span<const T> plane(int n, int c) const { return {data_.data() + index(n, c, 0, 0), plane_size()}; }

  /// Copy of sample `n` as a batch-1 tensor.
  Tensor slice(int n) const {
    Tensor out(1, c(), h(), w());
    std::copy(sample(n).begin(), sample(n).end(), out.data_.begin());
    return out;
  }

  void set_sample(int n, const Tensor& src) {
    if (src.n() != 1 || src.c() != c() || src.h() != h() || src.w() != w())
      throw ShapeError("set_sample: shape mismatch " + src.shape_string() + " into " + shape_string());
    std::copy(src.data_.begin(), src.data_.end(), data_.begin() + n * sample_size());
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  Tensor& operator+=(const Tensor& o) {
    require_same_shape(o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  std::string shape_string() const {
    std::ostringstream os;
    os << shape_[0] << "x" << shape_[1] << "x" << shape_[2] << "x" << shape_[3];
    return os.str();
  }

  void require_same_shape(const Tensor& o, const char* where) const {
    if (!same_shape(o))
      throw ShapeError(std::string(where) + ": shape mismatch " + shape_string() + " vs " + o.shape_string());
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(n(), c(), h(), w());
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.data_ == b.data_; }

 private:
  std::array<int, 4> shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

/// Stack batch-1 (or batch-k) tensors along the batch axis.
template <typename T>
Tensor<T> concat_batch(std::span<const Tensor<T>> parts) {
  if (parts.empty()) return {};
  const auto& first = parts.front();
  int total = 0;
  for (const auto& p : parts) {
    if (p.c() != first.c() || p.h() != first.h() || p.w() != first.w())
      throw ShapeError("concat_batch: mismatched sample shape " + p.shape_string() + " vs " + first.shape_string());
    total += p.n();
  }
  Tensor<T> out(total, first.c(), first.h(), first.w());
  auto dst = out.storage().begin();
  for (const auto& p : parts) dst = std::copy(p.storage().begin(), p.storage().end(), dst);
  return out;
}

/// A feature map together with its stride in image pixels per cell.
template <typename T>
struct FeatureMap {
  Tensor<T> data;
  int stride = 1;

  int n() const { return data.n(); }
  int c() const { return data.c(); }
  int h() const { return data.h(); }
  int w() const { return data.w(); }
};

}  // namespace vidalign
