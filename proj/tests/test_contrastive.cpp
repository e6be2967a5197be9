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
#include "vidalign/contrastive/cbcl.hpp"

namespace {

using vidalign::Tensor;
using vidalign::ValueError;
using vidalign::alignment::BinaryMask;
using vidalign::alignment::MaskSource;
namespace cl = vidalign::contrastive;

using Vec = std::vector<double>;

BinaryMask left_half(int h, int w) {
  BinaryMask m(h, w, MaskSource::ground_truth);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w / 2; ++x) m.at(y, x) = 1;
  return m;
}

double nce(const Vec& q, const Vec& p, const std::vector<Vec>& negs, double tau) {
  return cl::info_nce(q, p, std::span<const Vec>(negs), tau);
}

TEST(Concat, AnchorsThenReferences) {
  Tensor<double> a(2, 1, 1, 1), r(2, 1, 1, 1);
  a.storage() = {1, 2};
  r.storage() = {3, 4};
  const std::vector<BinaryMask> ma(2, left_half(1, 2)), mr(2, BinaryMask(1, 1, MaskSource::absent));
  const auto [stacked, masks] = cl::concat_cross_frame(a, r, std::span<const BinaryMask>(ma), std::span<const BinaryMask>(mr));
  EXPECT_EQ(stacked.storage(), (Vec{1, 2, 3, 4}));
  ASSERT_EQ(masks.size(), 4u);
  EXPECT_EQ(masks[0].source, MaskSource::ground_truth);
  EXPECT_EQ(masks[3].source, MaskSource::absent);
}

TEST(Bank, OneForegroundAndBackgroundPerFrame) {
  std::mt19937_64 rng(1);
  const auto f = oracle::random_tensor(rng, 4, 3, 4, 4);
  const std::vector<BinaryMask> masks(4, left_half(4, 4));
  const auto bank = cl::extract_pattern_bank(f, std::span<const BinaryMask>(masks));
  EXPECT_EQ(bank.foreground.size(), 4u);
  EXPECT_EQ(bank.background.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(bank.foreground[i].sample, i);
}

TEST(Bank, FullyCoveredFrameHasNoBackground) {
  std::mt19937_64 rng(2);
  const auto f = oracle::random_tensor(rng, 2, 3, 2, 2);
  BinaryMask full(2, 2, MaskSource::ground_truth);
  full.data.assign(4, 1);
  const std::vector<BinaryMask> masks{full, left_half(2, 2)};
  const auto bank = cl::extract_pattern_bank(f, std::span<const BinaryMask>(masks));
  EXPECT_EQ(bank.foreground.size(), 2u);
  ASSERT_EQ(bank.background.size(), 1u);
  EXPECT_EQ(bank.background[0].sample, 1);
}

TEST(Bank, PatternsAreNormalizedPools) {
  std::mt19937_64 rng(3);
  const auto f = oracle::random_tensor(rng, 1, 4, 4, 4);
  const std::vector<BinaryMask> masks{left_half(4, 4)};
  const auto bank = cl::extract_pattern_bank(f, std::span<const BinaryMask>(masks));
  const auto raw = oracle::pool_over_boxes(f, 0, {{0, 0, 8, 16}}, 4);
  const double lo = *std::min_element(raw.begin(), raw.end()), hi = *std::max_element(raw.begin(), raw.end());
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(bank.foreground[0].pattern.values[c], (raw[c] - lo) / (hi - lo), 1e-12);
}

cl::PatternBank<double> bank_of(int nf, int nb) {
  cl::PatternBank<double> b;
  for (int i = 0; i < nf; ++i) b.foreground.push_back({i, vidalign::alignment::normalize_pattern(Vec{0.0, 1.0 * i, 1.0})});
  for (int i = 0; i < nb; ++i) b.background.push_back({i, vidalign::alignment::normalize_pattern(Vec{1.0, 0.0, 0.5})});
  return b;
}

TEST(Sampling, EveryForegroundQueriesOnceAgainstAllBackgrounds) {
  std::mt19937_64 rng(4);
  const auto tuples = cl::sample_pairs(bank_of(4, 4), rng);
  ASSERT_EQ(tuples.size(), 4u);
  for (int q = 0; q < 4; ++q) {
    EXPECT_EQ(tuples[q].query, q);
    EXPECT_NE(tuples[q].positive, q);
    EXPECT_GE(tuples[q].positive, 0);
    EXPECT_LT(tuples[q].positive, 4);
    EXPECT_EQ(tuples[q].negatives, (std::vector<int>{0, 1, 2, 3}));
  }
}

TEST(Sampling, TooFewPatternsGiveNothing) {
  std::mt19937_64 rng(5);
  EXPECT_TRUE(cl::sample_pairs(bank_of(1, 4), rng).empty());
  EXPECT_TRUE(cl::sample_pairs(bank_of(3, 0), rng).empty());
}

TEST(Sampling, DeterministicForSeed) {
  std::mt19937_64 a(6), b(6);
  const auto ta = cl::sample_pairs(bank_of(6, 2), a), tb = cl::sample_pairs(bank_of(6, 2), b);
  for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_EQ(ta[i].positive, tb[i].positive);
}

TEST(InfoNce, HandValues) {
  EXPECT_NEAR(nce({1, 0}, {0, 1}, {{0, 1}}, 0.07), std::log(2.0), 1e-12);
  EXPECT_NEAR(nce({1, 0}, {1, 0}, {{0, 1}}, 1.0), std::log1p(std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(nce({1, 0, 0}, {0, 1, 0}, {{0, 0, 1}, {0, 1, 0}, {0, 0, 1}}, 0.5), std::log(4.0), 1e-12);
}

TEST(InfoNce, MatchesOracleOnRandomVectors) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    auto draw = [&] {
      Vec v(8);
      for (auto& x : v) x = u(rng);
      return v;
    };
    const Vec q = draw(), p = draw();
    std::vector<Vec> negs;
    for (int k = 0; k < 1 + trial % 5; ++k) negs.push_back(draw());
    for (double tau : {0.07, 0.5, 1.0}) EXPECT_NEAR(nce(q, p, negs, tau), oracle::info_nce(q, p, negs, tau), 1e-9);
  }
}

TEST(InfoNce, DecreasesAsPositiveAligns) {
  const Vec q{1, 0};
  const std::vector<Vec> negs{{0.6, 0.8}};
  double prev = 1e9;
  for (double a = 1.5; a >= 0; a -= 0.25) {
    const double v = nce(q, {std::cos(a), std::sin(a)}, negs, 0.07);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(InfoNce, LowTemperatureLimits) {
  EXPECT_LT(nce({1, 0}, {1, 0}, {{0, 1}}, 0.01), 1e-30);
  EXPECT_NEAR(nce({1, 0}, {0, 1}, {{1, 0}}, 0.01), 100.0, 1e-9);
}

TEST(InfoNce, NegativeOrderDoesNotMatter) {
  const std::vector<Vec> a{{0.1, 0.9, 0.3}, {0.7, 0.2, 0.4}, {0.5, 0.5, 0.5}};
  const std::vector<Vec> b{a[2], a[0], a[1]};
  EXPECT_NEAR(nce({0.3, 0.3, 0.9}, {0.2, 0.4, 0.8}, a, 0.07), nce({0.3, 0.3, 0.9}, {0.2, 0.4, 0.8}, b, 0.07), 1e-12);
}

TEST(InfoNce, RejectsBadInputs) {
  EXPECT_THROW(nce({1, 0}, {1, 0}, {}, 0.07), ValueError);
  EXPECT_THROW(nce({1, 0}, {1, 0}, {{0, 1}}, 0.0), ValueError);
}

TEST(Loss, MeanOfTuples) {
  const Vec v{0.6, 0.8};
  EXPECT_NEAR(cl::contrastive_loss(std::span<const double>(v)), 0.7, 1e-15);
  EXPECT_EQ(cl::contrastive_loss(std::span<const double>()), 0.0);
}

TEST(Loss, BankLossAveragesOracle) {
  const auto bank = bank_of(3, 2);
  std::mt19937_64 rng(8);
  const auto tuples = cl::sample_pairs(bank, rng);
  const auto r = cl::contrastive_loss_with_grad(bank, std::span<const cl::ContrastTuple>(tuples), 0.07);
  double sum = 0;
  for (const auto& t : tuples) {
    std::vector<Vec> negs;
    for (int b : t.negatives) negs.push_back(bank.background[b].pattern.values);
    sum += oracle::info_nce(bank.foreground[t.query].pattern.values, bank.foreground[t.positive].pattern.values, negs, 0.07);
  }
  EXPECT_NEAR(r.loss, sum / 3, 1e-9);
}

TEST(Cbcl, SingleForegroundGivesZero) {
  std::mt19937_64 rng(9);
  const auto fa = oracle::random_tensor(rng, 1, 3, 4, 4), fr = oracle::random_tensor(rng, 1, 3, 4, 4);
  const std::vector<BinaryMask> ma{left_half(4, 4)}, mr{BinaryMask(4, 4, MaskSource::absent)};
  const auto r = cl::cbcl_forward_backward(fa, fr, std::span<const BinaryMask>(ma), std::span<const BinaryMask>(mr), 0.07, rng);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.tuples, 0);
  for (double g : r.grad_anchor.storage()) EXPECT_EQ(g, 0.0);
}

}  // namespace
