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
#include <random>

#include "oracles.hpp"
#include "vidalign/detection/backbone.hpp"
#include "vidalign/detection/decode.hpp"
#include "vidalign/detection/fusion.hpp"
#include "vidalign/detection/heads.hpp"
#include "vidalign/detection/loss.hpp"
#include "vidalign/detection/targets.hpp"

namespace {

using vidalign::Detection;
using vidalign::FeatureMap;
using vidalign::ShapeError;
using vidalign::Tensor;
using vidalign::ValueError;
namespace det = vidalign::detection;

constexpr std::array<int, 4> kWidths{16, 32, 64, 128};

TEST(Backbone, StageShapesFollowStrides) {
  det::Backbone<float> bb(kWidths);
  vidalign::nn::Rng rng(1);
  bb.init(rng);
  const auto stages = bb.forward(Tensor<float>(1, 3, 64, 64));
  ASSERT_EQ(stages.size(), 4u);
  const std::array<std::array<int, 4>, 4> expect{{{1, 16, 32, 32}, {1, 32, 16, 16}, {1, 64, 8, 8}, {1, 128, 4, 4}}};
  for (int s = 0; s < 4; ++s) {
    EXPECT_EQ(stages[s].data.shape(), expect[s]);
    EXPECT_EQ(stages[s].stride, det::kStageStrides[s]);
    EXPECT_TRUE(stages[s].data.all_finite());
  }
}

TEST(Backbone, RejectsSizeNotDivisibleBy16) {
  det::Backbone<float> bb(kWidths);
  EXPECT_THROW(bb.forward(Tensor<float>(1, 3, 48 + 8, 64)), ShapeError);
  EXPECT_NO_THROW(bb.forward(Tensor<float>(1, 3, 48, 64)));
}

TEST(Backbone, ShapeCovarianceOverSizes) {
  det::Backbone<float> bb({4, 4, 4, 4});
  vidalign::nn::Rng rng(2);
  bb.init(rng);
  for (auto [h, w] : {std::pair{16, 16}, std::pair{32, 48}, std::pair{80, 16}}) {
    const auto stages = bb.forward(Tensor<float>(2, 3, h, w));
    for (int s = 0; s < 4; ++s) {
      EXPECT_EQ(stages[s].data.h(), h / det::kStageStrides[s]);
      EXPECT_EQ(stages[s].data.w(), w / det::kStageStrides[s]);
    }
  }
}

TEST(Fusion, OutputIsStrideFourAtFusionWidth) {
  det::Backbone<float> bb(kWidths);
  det::Fusion<float> fu(kWidths, 64);
  vidalign::nn::Rng rng(3);
  bb.init(rng);
  fu.init(rng);
  const auto out = fu.forward(bb.forward(Tensor<float>(1, 3, 64, 64, 0.5f)));
  EXPECT_EQ(out.stride, 4);
  EXPECT_EQ(out.data.shape(), (std::array<int, 4>{1, 64, 16, 16}));
}

TEST(Fusion, CoarsestPathwayAloneIsUpsampledProjection) {
  det::Backbone<double> bb(kWidths);
  det::Fusion<double> fu(kWidths, 8);
  vidalign::nn::Rng rng(4);
  bb.init(rng);
  fu.init(rng);
  for (int i = 0; i < 2; ++i) {
    std::fill(fu.laterals()[i].weight().value.begin(), fu.laterals()[i].weight().value.end(), 0.0);
    std::fill(fu.laterals()[i].bias().value.begin(), fu.laterals()[i].bias().value.end(), 0.0);
  }
  std::mt19937_64 r(9);
  const auto stages = bb.forward(oracle::random_tensor(r, 1, 3, 32, 32));
  const auto merged = fu.merge(stages);
  const auto coarse = fu.laterals()[2].forward(stages[3].data);
  for (int c = 0; c < 8; ++c)
    for (int y = 0; y < merged.h(); ++y)
      for (int x = 0; x < merged.w(); ++x) EXPECT_DOUBLE_EQ(merged(0, c, y, x), coarse(0, c, y / 4, x / 4));
}

TEST(Fusion, MismatchedBatchThrows) {
  det::Fusion<float> fu(kWidths, 8);
  std::vector<FeatureMap<float>> stages{{Tensor<float>(1, 16, 32, 32), 2},
                                        {Tensor<float>(1, 32, 16, 16), 4},
                                        {Tensor<float>(2, 64, 8, 8), 8},
                                        {Tensor<float>(1, 128, 4, 4), 16}};
  EXPECT_THROW(fu.forward(stages), ShapeError);
}

TEST(Heads, ShapesAndSquashing) {
  det::Heads<float> heads(64, 32);
  vidalign::nn::Rng rng(5);
  heads.init(rng);
  std::mt19937_64 r(1);
  const auto in = oracle::random_tensor(r, 1, 64, 16, 16).cast<float>();
  const auto out = heads.forward(in);
  EXPECT_EQ(out.center_heatmap.shape(), (std::array<int, 4>{1, 1, 16, 16}));
  EXPECT_EQ(out.size_map.shape(), (std::array<int, 4>{1, 2, 16, 16}));
  EXPECT_EQ(out.offset_map.shape(), (std::array<int, 4>{1, 2, 16, 16}));
  EXPECT_TRUE(out.size_map.all_finite());
  for (float v : out.center_heatmap.storage()) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(Heads, ZeroLogitGivesHalf) {
  det::Heads<double> heads(4, 4);
  vidalign::nn::Rng rng(6);
  heads.init(rng);
  auto& out = heads.output(det::HeadKind::center);
  std::fill(out.weight().value.begin(), out.weight().value.end(), 0.0);
  std::fill(out.bias().value.begin(), out.bias().value.end(), 0.0);
  const auto o = heads.forward(Tensor<double>(1, 4, 4, 4, 1.0));
  for (double v : o.center_heatmap.storage()) EXPECT_EQ(v, 0.5);
}

// ---- targets ---------------------------------------------------------------

det::Grid grid16() { return {16, 16, 4}; }

TEST(Targets, AlignedBoxHasZeroOffset) {
  const std::vector<std::vector<Detection>> boxes{{{20, 20, 8, 8, 1}}};
  const auto t = det::render_targets<double>(boxes, grid16());
  EXPECT_TRUE(t.is_positive(0, 5, 5));
  EXPECT_EQ(t.positive_count(), 1);
  EXPECT_EQ(t.heatmap(0, 0, 5, 5), 1.0);
  EXPECT_EQ(t.offset(0, 0, 5, 5), 0.0);
  EXPECT_EQ(t.offset(0, 1, 5, 5), 0.0);
  EXPECT_EQ(t.size(0, 0, 5, 5), 2.0);
  EXPECT_EQ(t.size(0, 1, 5, 5), 2.0);
}

TEST(Targets, RemainderBecomesOffset) {
  const std::vector<std::vector<Detection>> boxes{{{22, 22, 8, 8, 1}}};
  const auto t = det::render_targets<double>(boxes, grid16());
  EXPECT_TRUE(t.is_positive(0, 5, 5));
  EXPECT_DOUBLE_EQ(t.offset(0, 0, 5, 5), 0.5);
  EXPECT_DOUBLE_EQ(t.offset(0, 1, 5, 5), 0.5);
}

TEST(Targets, DuplicateBoxIsIdempotent) {
  const Detection d{30, 18, 12, 10, 1};
  const auto one = det::render_targets<double>(std::vector<std::vector<Detection>>{{d}}, grid16());
  const auto two = det::render_targets<double>(std::vector<std::vector<Detection>>{{d, d}}, grid16());
  EXPECT_EQ(one.heatmap, two.heatmap);
}

TEST(Targets, OverlapCombinesByMax) {
  const Detection a{20, 20, 16, 16, 1}, b{28, 20, 16, 16, 1};
  const auto ta = det::render_targets<double>(std::vector<std::vector<Detection>>{{a}}, grid16());
  const auto tb = det::render_targets<double>(std::vector<std::vector<Detection>>{{b}}, grid16());
  const auto both = det::render_targets<double>(std::vector<std::vector<Detection>>{{a, b}}, grid16());
  for (std::size_t i = 0; i < both.heatmap.size(); ++i)
    EXPECT_EQ(both.heatmap.storage()[i], std::max(ta.heatmap.storage()[i], tb.heatmap.storage()[i]));
}

TEST(Targets, ZeroAreaBoxRejected) {
  EXPECT_THROW(det::render_targets<double>(std::vector<std::vector<Detection>>{{{10, 10, 0, 4, 1}}}, grid16()),
               ValueError);
}

TEST(Targets, HeatmapWithinUnitIntervalAndOneOnlyAtCenters) {
  const std::vector<std::vector<Detection>> boxes{{{13, 41, 9, 14, 1}, {50, 10, 20, 6, 1}}, {}};
  const auto t = det::render_targets<double>(boxes, grid16());
  for (int n = 0; n < 2; ++n)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        const double v = t.heatmap(n, 0, y, x);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        if (t.is_positive(n, y, x)) EXPECT_EQ(v, 1.0);
      }
  EXPECT_EQ(t.positive_count(), 2);
}

TEST(Targets, GaussianRadiusGrowsWithBoxSize) {
  double prev = 0;
  for (double s : {2.0, 4.0, 8.0, 16.0}) {
    const double r = det::gaussian_radius(s, s);
    EXPECT_GT(r, prev);
    prev = r;
  }
  EXPECT_LT(det::gaussian_radius(4, 4, 0.9), det::gaussian_radius(4, 4, 0.5));
}

// ---- loss ------------------------------------------------------------------

det::DetectorOutputs<double> perfect_outputs(const det::GroundTruthTargets<double>& t) {
  det::DetectorOutputs<double> o{Tensor<double>(t.heatmap.n(), 1, t.heatmap.h(), t.heatmap.w()), t.size, t.offset};
  for (int n = 0; n < t.heatmap.n(); ++n)
    for (int y = 0; y < t.heatmap.h(); ++y)
      for (int x = 0; x < t.heatmap.w(); ++x) o.center_heatmap(n, 0, y, x) = t.is_positive(n, y, x) ? 1.0 : 0.0;
  return o;
}

TEST(Loss, PerfectPredictionIsExactlyZero) {
  const std::vector<std::vector<Detection>> boxes{{{22, 22, 8, 8, 1}, {45, 13, 10, 6, 1}}};
  const auto t = det::render_targets<double>(boxes, grid16());
  const auto r = det::detection_loss(perfect_outputs(t), t, {});
  EXPECT_EQ(r.center, 0.0);
  EXPECT_EQ(r.size, 0.0);
  EXPECT_EQ(r.offset, 0.0);
  EXPECT_EQ(r.total, 0.0);
}

TEST(Loss, SizeErrorHandSum) {
  const std::vector<std::vector<Detection>> boxes{{{22, 22, 8, 8, 1}}};
  const auto t = det::render_targets<double>(boxes, grid16());
  auto o = perfect_outputs(t);
  o.size_map(0, 0, 5, 5) += 1.0;
  o.size_map(0, 1, 5, 5) += 1.0;
  const auto r = det::detection_loss(o, t, {0.1, 1.0});
  EXPECT_DOUBLE_EQ(r.size, 2.0);  // |1| + |1| over one positive cell
  EXPECT_EQ(r.center, 0.0);
  EXPECT_EQ(r.offset, 0.0);
  EXPECT_DOUBLE_EQ(r.total, 0.1 * 2.0);
}

TEST(Loss, ComponentsNonNegativeAndZeroPositivesStillScoreCenter) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  const auto t = det::render_targets<double>(std::vector<std::vector<Detection>>{{}}, grid16());
  det::DetectorOutputs<double> o{Tensor<double>(1, 1, 16, 16), oracle::random_tensor(rng, 1, 2, 16, 16),
                                 oracle::random_tensor(rng, 1, 2, 16, 16)};
  for (auto& v : o.center_heatmap.storage()) v = u(rng);
  const auto r = det::detection_loss(o, t, {});
  EXPECT_GT(r.center, 0.0);
  EXPECT_EQ(r.size, 0.0);
  EXPECT_EQ(r.offset, 0.0);
}

TEST(Loss, FocalMatchesHandComputationAtOneCell) {
  // 1x1 grid with one positive: loss = -(1-p)^2 log p.
  const det::Grid g{1, 1, 4};
  const auto t = det::render_targets<double>(std::vector<std::vector<Detection>>{{{2, 2, 4, 4, 1}}}, g);
  det::DetectorOutputs<double> o{Tensor<double>(1, 1, 1, 1, 0.3), t.size, t.offset};
  EXPECT_NEAR(det::detection_loss(o, t, {}).center, -0.49 * std::log(0.3), 1e-15);
}

// ---- decode ----------------------------------------------------------------

det::DetectorOutputs<double> blank(int h, int w, double fill) {
  return {Tensor<double>(1, 1, h, w, fill), Tensor<double>(1, 2, h, w), Tensor<double>(1, 2, h, w)};
}

TEST(Decode, SinglePeakHandDecode) {
  auto o = blank(16, 16, 0.1);
  o.center_heatmap(0, 0, 5, 5) = 0.9;
  o.offset_map(0, 0, 5, 5) = 0.1;
  o.offset_map(0, 1, 5, 5) = 0.2;
  o.size_map(0, 0, 5, 5) = 2;
  o.size_map(0, 1, 5, 5) = 3;
  const auto d = det::decode_detections(o, 0, 4, 10, 0.5);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NEAR(d[0].cx, 20.4, 1e-12);
  EXPECT_NEAR(d[0].cy, 20.8, 1e-12);
  EXPECT_DOUBLE_EQ(d[0].w, 8);
  EXPECT_DOUBLE_EQ(d[0].h, 12);
  EXPECT_DOUBLE_EQ(d[0].score, 0.9);
}

TEST(Decode, ThresholdFloorYieldsEmpty) {
  EXPECT_TRUE(det::decode_detections(blank(8, 8, 0.1), 0, 4, 100, 0.6).empty());
  EXPECT_THROW(det::decode_detections(blank(8, 8, 0.1), 0, 4, 100, 1.5), ValueError);
}

TEST(Decode, PlateauPeaksKeptInRowMajorOrder) {
  auto o = blank(8, 8, 0.0);
  o.center_heatmap(0, 0, 3, 4) = 0.8;
  o.center_heatmap(0, 0, 3, 5) = 0.8;
  o.center_heatmap(0, 0, 1, 1) = 0.5;
  const auto d = det::decode_detections(o, 0, 4, 3, 0.3);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_DOUBLE_EQ(d[0].cx, 16);
  EXPECT_DOUBLE_EQ(d[1].cx, 20);
  EXPECT_DOUBLE_EQ(d[2].score, 0.5);
}

TEST(Decode, LocalMaximaMatchBruteForceScan) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> level(0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    auto o = blank(7, 9, 0.0);
    for (auto& v : o.center_heatmap.storage()) v = level(rng) / 4.0;
    const auto d = det::decode_detections(o, 0, 1, -1, 0.0);
    std::vector<std::tuple<double, int, int>> expect;
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 9; ++x) {
        bool peak = true;
        for (int yy = std::max(0, y - 1); yy <= std::min(6, y + 1); ++yy)
          for (int xx = std::max(0, x - 1); xx <= std::min(8, x + 1); ++xx)
            peak = peak && o.center_heatmap(0, 0, yy, xx) <= o.center_heatmap(0, 0, y, x);
        if (peak) expect.emplace_back(-o.center_heatmap(0, 0, y, x), y, x);
      }
    std::sort(expect.begin(), expect.end());
    ASSERT_EQ(d.size(), expect.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_EQ(d[i].score, -std::get<0>(expect[i]));
      EXPECT_EQ(d[i].cy, std::get<1>(expect[i]));
      EXPECT_EQ(d[i].cx, std::get<2>(expect[i]));
    }
  }
}

TEST(Decode, RenderDecodeRoundTrip) {
  const std::vector<Detection> boxes{{22.5, 13.0, 10, 6, 1}, {46, 44, 12, 16, 1}};
  const auto t = det::render_targets<double>(std::vector<std::vector<Detection>>{boxes}, grid16());
  det::DetectorOutputs<double> o{t.heatmap, t.size, t.offset};
  const auto d = det::decode_detections(o, 0, 4, 10, 0.99);
  ASSERT_EQ(d.size(), 2u);
  for (const auto& b : boxes) {
    bool found = false;
    for (const auto& x : d)
      if (std::abs(x.cx - b.cx) <= 2 && std::abs(x.cy - b.cy) <= 2) {
        found = true;
        EXPECT_DOUBLE_EQ(x.w, b.w);
        EXPECT_DOUBLE_EQ(x.h, b.h);
      }
    EXPECT_TRUE(found);
  }
}

}  // namespace
