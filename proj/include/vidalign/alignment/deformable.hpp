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

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "vidalign/nn/conv.hpp"
#include "vidalign/nn/ops.hpp"

namespace vidalign::alignment {

inline constexpr int kTaps = 9;
inline constexpr int kOffsetChannels = 2 * kTaps;  // (dy, dx) per 3x3 tap

/// Bilinear interpolation of channel `c` of sample `n` at real position
/// (y, x). Neighbours outside the grid read as zero.
template <typename T>
T bilinear_sample(const Tensor<T>& f, T y, T x, int c, int n) {
  const int H = f.h(), W = f.w();
  const T fy = std::floor(y), fx = std::floor(x);
  const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
  const T ly = y - fy, lx = x - fx;
  auto at = [&](int yy, int xx) -> T {
    return (yy >= 0 && yy < H && xx >= 0 && xx < W) ? f(n, c, yy, xx) : T(0);
  };
  if (y0 + 1 < 0 || y0 >= H || x0 + 1 < 0 || x0 >= W) return T(0);
  return (T(1) - ly) * (T(1) - lx) * at(y0, x0) + (T(1) - ly) * lx * at(y0, x0 + 1) +
         ly * (T(1) - lx) * at(y0 + 1, x0) + ly * lx * at(y0 + 1, x0 + 1);
}

namespace detail {

/// Four bilinear corners of one sampling point; index -1 marks out-of-grid.
template <typename T>
struct Corners {
  std::array<int, 4> idx{-1, -1, -1, -1};  // (y0,x0) (y0,x1) (y1,x0) (y1,x1)
  std::array<T, 4> w{};
  T ly = T(0), lx = T(0);
};

template <typename T>
Corners<T> corners(T y, T x, int H, int W) {
  Corners<T> k;
  const T fy = std::floor(y), fx = std::floor(x);
  const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
  k.ly = y - fy;
  k.lx = x - fx;
  const std::array<int, 4> ys{y0, y0, y0 + 1, y0 + 1}, xs{x0, x0 + 1, x0, x0 + 1};
  k.w = {(T(1) - k.ly) * (T(1) - k.lx), (T(1) - k.ly) * k.lx, k.ly * (T(1) - k.lx), k.ly * k.lx};
  for (int i = 0; i < 4; ++i)
    if (ys[i] >= 0 && ys[i] < H && xs[i] >= 0 && xs[i] < W) k.idx[i] = ys[i] * W + xs[i];
  return k;
}

}  // namespace detail

/// 3x3 deformable convolution (single offset group, no modulation, stride 1).
/// output(o, p) = sum_{c,k} w(o, c, k) * F(c, p + r_k + delta_k(p)) + b(o)
template <typename T>
class DeformConv2d {
 public:
  DeformConv2d() = default;
  DeformConv2d(const std::string& name, int in_channels, int out_channels)
      : in_(in_channels),
        out_(out_channels),
        weight_(name + ".weight", {out_channels, in_channels, 3, 3}),
        bias_(name + ".bias", {out_channels}) {}

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  nn::Parameter<T>& weight() { return weight_; }
  nn::Parameter<T>& bias() { return bias_; }
  const nn::Parameter<T>& weight() const { return weight_; }

  void init(nn::Rng& rng) {
    nn::he_normal(weight_, in_ * kTaps, rng);
    std::fill(bias_.value.begin(), bias_.value.end(), T(0));
  }

  void collect(nn::ParameterRefs<T>& out) {
    out.push_back(weight_);
    out.push_back(bias_);
  }

  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& offsets) const {
    check(x, offsets);
    const int H = x.h(), W = x.w();
    const Eigen::Index plane = static_cast<Eigen::Index>(H) * W;
    Tensor<T> y(x.n(), out_, H, W);
    nn::ConstMatMap<T> w(weight_.value.data(), out_, in_ * kTaps);
    std::vector<T> cols;
    for (int n = 0; n < x.n(); ++n) {
      sample_columns(x, offsets, n, cols);
      nn::MatMap<T> out(y.sample(n).data(), out_, plane);
      out.noalias() = w * nn::ConstMatMap<T>(cols.data(), in_ * kTaps, plane);
      for (int o = 0; o < out_; ++o) out.row(o).array() += bias_.value[o];
    }
    return y;
  }

  /// Accumulates parameter gradients; fills input and offset gradients.
  void backward(const Tensor<T>& x, const Tensor<T>& offsets, const Tensor<T>& gy, Tensor<T>& gx,
                Tensor<T>& goffsets) {
    check(x, offsets);
    const int C = in_, H = x.h(), W = x.w();
    const Eigen::Index plane = static_cast<Eigen::Index>(H) * W;
    gx = Tensor<T>(x.n(), x.c(), H, W);
    goffsets = Tensor<T>(offsets.n(), offsets.c(), H, W);
    nn::ConstMatMap<T> w(weight_.value.data(), out_, C * kTaps);
    nn::MatMap<T> gw(weight_.grad.data(), out_, C * kTaps);
    std::vector<T> cols, gcols(static_cast<std::size_t>(C) * kTaps * plane);
    for (int n = 0; n < x.n(); ++n) {
      nn::ConstMatMap<T> g(gy.sample(n).data(), out_, plane);
      for (int o = 0; o < out_; ++o) bias_.grad[o] += g.row(o).sum();
      sample_columns(x, offsets, n, cols);
      gw.noalias() += g * nn::ConstMatMap<T>(cols.data(), C * kTaps, plane).transpose();
      nn::MatMap<T>(gcols.data(), C * kTaps, plane).noalias() = w.transpose() * g;

      for (int k = 0; k < kTaps; ++k) {
        for (int py = 0; py < H; ++py) {
          for (int px = 0; px < W; ++px) {
            const int p = py * W + px;
            const T sy = py + (k / 3 - 1) + offsets(n, 2 * k, py, px);
            const T sx = px + (k % 3 - 1) + offsets(n, 2 * k + 1, py, px);
            const auto cr = detail::corners(sy, sx, H, W);
            T gdy = T(0), gdx = T(0);
            for (int c = 0; c < C; ++c) {
              const T gc = gcols[(static_cast<std::size_t>(c) * kTaps + k) * plane + p];
              if (gc == T(0)) continue;
              auto gplane = gx.plane(n, c);
              const auto xplane = x.plane(n, c);
              std::array<T, 4> v{};
              for (int i = 0; i < 4; ++i) {
                if (cr.idx[i] < 0) continue;
                gplane[cr.idx[i]] += gc * cr.w[i];
                v[i] = xplane[cr.idx[i]];
              }
              gdy += gc * ((T(1) - cr.lx) * (v[2] - v[0]) + cr.lx * (v[3] - v[1]));
              gdx += gc * ((T(1) - cr.ly) * (v[1] - v[0]) + cr.ly * (v[3] - v[2]));
            }
            goffsets(n, 2 * k, py, px) += gdy;
            goffsets(n, 2 * k + 1, py, px) += gdx;
          }
        }
      }
    }
  }

 private:
  void check(const Tensor<T>& x, const Tensor<T>& offsets) const {
    if (x.c() != in_) throw ShapeError("deformable_align: expected " + std::to_string(in_) + " channels");
    if (offsets.n() != x.n() || offsets.c() != kOffsetChannels || offsets.h() != x.h() || offsets.w() != x.w())
      throw ShapeError("deformable_align: dynamic field " + offsets.shape_string() + " does not match feature " +
                       x.shape_string());
  }

  void sample_columns(const Tensor<T>& x, const Tensor<T>& offsets, int n, std::vector<T>& cols) const {
    const int C = in_, H = x.h(), W = x.w();
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    cols.assign(static_cast<std::size_t>(C) * kTaps * plane, T(0));
    for (int k = 0; k < kTaps; ++k) {
      for (int py = 0; py < H; ++py) {
        for (int px = 0; px < W; ++px) {
          const std::size_t p = static_cast<std::size_t>(py) * W + px;
          const T sy = py + (k / 3 - 1) + offsets(n, 2 * k, py, px);
          const T sx = px + (k % 3 - 1) + offsets(n, 2 * k + 1, py, px);
          const auto cr = detail::corners(sy, sx, H, W);
          for (int c = 0; c < C; ++c) {
            const auto xplane = x.plane(n, c);
            T v = T(0);
            for (int i = 0; i < 4; ++i)
              if (cr.idx[i] >= 0) v += cr.w[i] * xplane[cr.idx[i]];
            cols[(static_cast<std::size_t>(c) * kTaps + k) * plane + p] = v;
          }
        }
      }
    }
  }

  int in_ = 0, out_ = 0;
  nn::Parameter<T> weight_, bias_;
};

template <typename T>
struct BdaTrace {
  Tensor<T> enhanced;    // F~
  Tensor<T> difference;  // F~ - F_r
  Tensor<T> field;       // D
};

/// Background dynamic alignment: D = Conv1x1(F~ - F_r), F* = DeformConv3x3(F~, D).
/// The offset projection starts at zero, so at init the block is a plain 3x3 conv.
template <typename T>
class BackgroundAlignment {
 public:
  BackgroundAlignment() = default;
  explicit BackgroundAlignment(int channels)
      : offset_conv_("bda.offset", channels, kOffsetChannels, 1, 1), deform_("bda.deform", channels, channels) {}

  void init(nn::Rng& rng) {
    std::fill(offset_conv_.weight().value.begin(), offset_conv_.weight().value.end(), T(0));
    std::fill(offset_conv_.bias().value.begin(), offset_conv_.bias().value.end(), T(0));
    deform_.init(rng);
  }

  void collect(nn::ParameterRefs<T>& out) {
    offset_conv_.collect(out);
    deform_.collect(out);
  }

  Tensor<T> dynamic_field(const Tensor<T>& enhanced, const Tensor<T>& reference) const {
    enhanced.require_same_shape(reference, "dynamic_field");
    return offset_conv_.forward(nn::subtract(enhanced, reference));
  }

  Tensor<T> forward(const Tensor<T>& enhanced, const Tensor<T>& reference, BdaTrace<T>* trace = nullptr) const {
    enhanced.require_same_shape(reference, "dynamic_field");
    Tensor<T> diff = nn::subtract(enhanced, reference);
    Tensor<T> field = offset_conv_.forward(diff);
    Tensor<T> out = deform_.forward(enhanced, field);
    if (trace) *trace = {enhanced, std::move(diff), std::move(field)};
    return out;
  }

  void backward(const BdaTrace<T>& trace, const Tensor<T>& grad_out, Tensor<T>& grad_enhanced,
                Tensor<T>& grad_reference) {
    Tensor<T> gfield;
    deform_.backward(trace.enhanced, trace.field, grad_out, grad_enhanced, gfield);
    Tensor<T> gdiff = offset_conv_.backward(trace.difference, gfield);
    grad_enhanced += gdiff;
    grad_reference = nn::scaled(std::move(gdiff), T(-1));
  }

  nn::Conv2d<T>& offset_conv() { return offset_conv_; }
  DeformConv2d<T>& deform() { return deform_; }
  const DeformConv2d<T>& deform() const { return deform_; }

 private:
  nn::Conv2d<T> offset_conv_;
  DeformConv2d<T> deform_;
};

}  // namespace vidalign::alignment
