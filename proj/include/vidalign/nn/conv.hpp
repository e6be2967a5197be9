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

#include <Eigen/Core>

#include <string>
#include <vector>

#include "vidalign/core/tensor.hpp"
#include "vidalign/nn/parameter.hpp"

namespace vidalign::nn {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

/// Unpack one sample of `x` into a [C*k*k, Ho*Wo] column matrix (zero padding).
template <typename T>
void im2col(const Tensor<T>& x, int n, int k, int stride, int pad, int out_h, int out_w, std::vector<T>& cols) {
  const int C = x.c(), H = x.h(), W = x.w();
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  cols.assign(static_cast<std::size_t>(C) * k * k * plane, T(0));
  for (int c = 0; c < C; ++c) {
    const T* src = x.plane(n, c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = cols.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < W) dst[oy * out_w + ox] = src[iy * W + ix];
          }
        }
      }
    }
  }
}

/// Scatter-add a column matrix back onto sample `n` of `gx`.
template <typename T>
void col2im(const std::vector<T>& cols, int k, int stride, int pad, int out_h, int out_w, Tensor<T>& gx, int n) {
  const int C = gx.c(), H = gx.h(), W = gx.w();
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < C; ++c) {
    T* dst = gx.plane(n, c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = cols.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < W) dst[iy * W + ix] += src[oy * out_w + ox];
          }
        }
      }
    }
  }
}

/// Square-kernel 2-D convolution with "same"-style padding k/2.
///
/// Forward is stateless; backward takes the forward input again and
/// accumulates parameter gradients, so one layer can serve several
/// inputs per step (shared weights across anchor and reference frames).
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride = 1)
      : in_(in_channels),
        out_(out_channels),
        k_(kernel),
        stride_(stride),
        weight_(name + ".weight", {out_channels, in_channels, kernel, kernel}),
        bias_(name + ".bias", {out_channels}) {}

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return k_; }
  int stride() const { return stride_; }
  int pad() const { return k_ / 2; }

  int out_size(int in) const { return (in + 2 * pad() - k_) / stride_ + 1; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  const Parameter<T>& weight() const { return weight_; }
  const Parameter<T>& bias() const { return bias_; }

  void init(Rng& rng) {
    he_normal(weight_, in_ * k_ * k_, rng);
    std::fill(bias_.value.begin(), bias_.value.end(), T(0));
  }

  void collect(ParameterRefs<T>& out) {
    out.push_back(weight_);
    out.push_back(bias_);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    check_input(x);
    const int oh = out_size(x.h()), ow = out_size(x.w());
    Tensor<T> y(x.n(), out_, oh, ow);
    const int rows = in_ * k_ * k_;
    const Eigen::Index plane = static_cast<Eigen::Index>(oh) * ow;
    ConstMatMap<T> w(weight_.value.data(), out_, rows);
    std::vector<T> cols;
    for (int n = 0; n < x.n(); ++n) {
      MatMap<T> out(y.sample(n).data(), out_, plane);
      if (is_pointwise()) {
        out.noalias() = w * ConstMatMap<T>(x.sample(n).data(), rows, plane);
      } else {
        im2col(x, n, k_, stride_, pad(), oh, ow, cols);
        out.noalias() = w * ConstMatMap<T>(cols.data(), rows, plane);
      }
      for (int o = 0; o < out_; ++o) out.row(o).array() += bias_.value[o];
    }
    return y;
  }

  /// Accumulates dL/dweight and dL/dbias; returns dL/dx when requested.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& gy, bool need_input_grad = true) {
    check_input(x);
    const int oh = out_size(x.h()), ow = out_size(x.w());
    if (gy.n() != x.n() || gy.c() != out_ || gy.h() != oh || gy.w() != ow)
      throw ShapeError("Conv2d::backward: gradient shape " + gy.shape_string());
    const int rows = in_ * k_ * k_;
    const Eigen::Index plane = static_cast<Eigen::Index>(oh) * ow;
    ConstMatMap<T> w(weight_.value.data(), out_, rows);
    MatMap<T> gw(weight_.grad.data(), out_, rows);
    Tensor<T> gx;
    if (need_input_grad) gx = Tensor<T>(x.n(), x.c(), x.h(), x.w());
    std::vector<T> cols, gcols;
    for (int n = 0; n < x.n(); ++n) {
      ConstMatMap<T> g(gy.sample(n).data(), out_, plane);
      for (int o = 0; o < out_; ++o) bias_.grad[o] += g.row(o).sum();
      if (is_pointwise()) {
        ConstMatMap<T> xin(x.sample(n).data(), rows, plane);
        gw.noalias() += g * xin.transpose();
        if (need_input_grad) {
          MatMap<T> gin(gx.sample(n).data(), rows, plane);
          gin.noalias() = w.transpose() * g;
        }
      } else {
        im2col(x, n, k_, stride_, pad(), oh, ow, cols);
        gw.noalias() += g * ConstMatMap<T>(cols.data(), rows, plane).transpose();
        if (need_input_grad) {
          gcols.resize(static_cast<std::size_t>(rows) * plane);
          MatMap<T>(gcols.data(), rows, plane).noalias() = w.transpose() * g;
          col2im(gcols, k_, stride_, pad(), oh, ow, gx, n);
        }
      }
    }
    return gx;
  }

 private:
  bool is_pointwise() const { return k_ == 1 && stride_ == 1; }

  void check_input(const Tensor<T>& x) const {
    if (x.c() != in_)
      throw ShapeError("Conv2d '" + weight_.name + "': expected " + std::to_string(in_) + " input channels, got " +
                       x.shape_string());
  }

  int in_ = 0, out_ = 0, k_ = 1, stride_ = 1;
  Parameter<T> weight_, bias_;
};

}  // namespace vidalign::nn
