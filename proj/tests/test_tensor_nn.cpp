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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "vidalign/core/box.hpp"
#include "vidalign/core/tensor.hpp"
#include "vidalign/nn/adam.hpp"
#include "vidalign/nn/conv.hpp"
#include "vidalign/nn/ops.hpp"

namespace {

using vidalign::Box;
using vidalign::ShapeError;
using vidalign::Tensor;
namespace nn = vidalign::nn;

TEST(Tensor, IndexingIsRowMajorNchw) {
  Tensor<int> t(2, 3, 4, 5);
  EXPECT_EQ(t.index(1, 2, 3, 4), t.size() - 1);
  EXPECT_EQ(t.index(0, 1, 0, 0), 20u);
  t(1, 0, 2, 3) = 7;
  EXPECT_EQ(t.slice(1)(0, 0, 2, 3), 7);
}

TEST(Tensor, ConcatBatchStacksSamples) {
  Tensor<float> a(1, 2, 2, 2, 1.0f), b(2, 2, 2, 2, 2.0f);
  const std::array<Tensor<float>, 2> parts{a, b};
  const auto c = vidalign::concat_batch<float>(parts);
  ASSERT_EQ(c.n(), 3);
  EXPECT_EQ(c(0, 1, 1, 1), 1.0f);
  EXPECT_EQ(c(2, 0, 0, 0), 2.0f);
}

TEST(Tensor, MismatchedShapesThrow) {
  Tensor<float> a(1, 2, 2, 2), b(1, 2, 2, 3);
  EXPECT_THROW(a += b, ShapeError);
  EXPECT_THROW(Tensor<float>(-1, 1, 1, 1), ShapeError);
}

TEST(Box, IouOfKnownOverlap) {
  EXPECT_DOUBLE_EQ(vidalign::iou(Box{0, 0, 2, 2}, Box{1, 0, 3, 2}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(vidalign::iou(Box{0, 0, 2, 2}, Box{0, 0, 2, 2}), 1.0);
  EXPECT_EQ(vidalign::iou(Box{0, 0, 0, 2}, Box{0, 0, 2, 2}), 0.0);
  EXPECT_EQ(vidalign::iou(Box{0, 0, 1, 1}, Box{1, 1, 2, 2}), 0.0);
}

TEST(Box, DetectionRoundTrip) {
  const Box b{1.5, 2, 7, 11};
  EXPECT_EQ(vidalign::Detection::from_box(b).box(), b);
}

class ConvOracle : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(ConvOracle, MatchesDirectLoops) {
  const auto [k, stride] = GetParam();
  std::mt19937_64 rng(11 + k * 7 + stride);
  nn::Conv2d<double> conv("c", 3, 4, k, stride);
  conv.init(rng);
  std::normal_distribution<double> nd;
  for (auto& b : conv.bias().value) b = nd(rng);
  const auto x = oracle::random_tensor(rng, 2, 3, 7, 6);
  const auto y = conv.forward(x);
  const auto ref = oracle::conv2d(x, conv.weight().value, conv.bias().value, 4, k, stride);
  ASSERT_EQ(y.shape(), ref.shape());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.storage()[i], ref.storage()[i], 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Kernels, ConvOracle,
                         ::testing::Values(std::make_tuple(1, 1), std::make_tuple(3, 1), std::make_tuple(3, 2),
                                           std::make_tuple(1, 2)));

TEST(Conv, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  nn::Conv2d<double> conv("c", 2, 3, 3, 2);
  conv.init(rng);
  const auto x = oracle::random_tensor(rng, 2, 2, 6, 5);
  const auto gy = oracle::random_tensor(rng, 2, 3, 3, 3);
  auto loss = [&](const Tensor<double>& in) {
    const auto y = conv.forward(in);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.storage()[i] * gy.storage()[i];
    return s;
  };
  const auto gx = conv.backward(x, gy);
  const auto num_x = oracle::numeric_grad(
      [&](const std::vector<double>& v) {
        Tensor<double> t = x;
        t.storage() = v;
        return loss(t);
      },
      x.storage());
  EXPECT_LT(oracle::max_rel_error(gx.storage(), num_x), 1e-6);

  const auto analytic_w = conv.weight().grad;
  const auto num_w = oracle::numeric_grad(
      [&](const std::vector<double>& v) {
        const auto keep = conv.weight().value;
        conv.weight().value = v;
        const double l = loss(x);
        conv.weight().value = keep;
        return l;
      },
      conv.weight().value);
  EXPECT_LT(oracle::max_rel_error(analytic_w, num_w), 1e-6);
}

TEST(Ops, SigmoidAndRelu) {
  EXPECT_DOUBLE_EQ(nn::sigmoid(0.0), 0.5);
  EXPECT_NEAR(nn::sigmoid(-800.0), 0.0, 1e-300);
  EXPECT_TRUE(std::isfinite(nn::sigmoid(-800.0)));
  Tensor<double> x(1, 1, 1, 3);
  x.storage() = {-1, 0, 2};
  const auto y = nn::relu(x);
  EXPECT_EQ(y.storage(), (std::vector<double>{0, 0, 2}));
  Tensor<double> g(1, 1, 1, 3, 1.0);
  EXPECT_EQ(nn::relu_backward(y, g).storage(), (std::vector<double>{0, 0, 1}));
}

TEST(Ops, UpsampleBackwardIsAdjoint) {
  std::mt19937_64 rng(3);
  const auto x = oracle::random_tensor(rng, 1, 2, 3, 3);
  const auto gy = oracle::random_tensor(rng, 1, 2, 6, 6);
  const auto y = nn::upsample_nearest(x, 2);
  const auto gx = nn::upsample_nearest_backward(gy, 2);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y.storage()[i] * gy.storage()[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x.storage()[i] * gx.storage()[i];
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Adam, CosineScheduleEndpoints) {
  EXPECT_DOUBLE_EQ(nn::cosine_lr(1e-4, 1e-5, 0, 64), 1e-4);
  EXPECT_NEAR(nn::cosine_lr(1e-4, 1e-5, 63, 64), 1e-5, 1e-18);
  const double mid = nn::cosine_lr(1e-4, 1e-5, 1, 3);
  EXPECT_NEAR(mid, 5.5e-5, 1e-18);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  nn::Parameter<double> p("p", {3});
  p.value = {1.0, -2.0, 0.5};
  p.grad = {0.3, -4.0, 0.0};
  nn::ParameterRefs<double> refs{p};
  nn::Adam<double> opt({0.01, 0.9, 0.999, 1e-8, 0.0});
  opt.step(refs);
  // Bias-corrected first step is lr * sign(g).
  EXPECT_NEAR(p.value[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p.value[1], -2.0 + 0.01, 1e-9);
  EXPECT_DOUBLE_EQ(p.value[2], 0.5);
}

TEST(Adam, WeightDecayPullsTowardZero) {
  nn::Parameter<double> p("p", {1});
  p.value = {2.0};
  nn::ParameterRefs<double> refs{p};
  nn::Adam<double> opt({0.1, 0.9, 0.999, 1e-8, 5e-4});
  opt.step(refs);
  EXPECT_LT(p.value[0], 2.0);
}

}  // namespace
