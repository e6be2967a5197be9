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
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vidalign/core/box.hpp"
#include "vidalign/core/error.hpp"

namespace vidalign::evaluation {

enum class Criterion { center_in_box, iou };

struct MatchRule {
  Criterion criterion = Criterion::center_in_box;
  double iou_threshold = 0.5;
};

inline MatchRule parse_rule(const std::string& name, double iou_threshold = 0.5) {
  if (name == "center_in_box") return {Criterion::center_in_box, iou_threshold};
  if (name == "iou") return {Criterion::iou, iou_threshold};
  throw ValueError("unknown match criterion '" + name + "'");
}

inline std::string to_string(Criterion c) { return c == Criterion::iou ? "iou" : "center_in_box"; }

/// Per-frame matching outcome. matched_gt[i] is the GT index paired with
/// prediction i, or -1.
struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<int> matched_gt;

  bool matched(std::size_t pred) const { return matched_gt[pred] >= 0; }
};

inline bool satisfies(const MatchRule& rule, const Detection& pred, const Box& gt) {
  if (rule.criterion == Criterion::center_in_box) return gt.contains(pred.cx, pred.cy);
  return iou(pred.box(), gt) >= rule.iou_threshold;
}

/// Greedy one-to-one matching. Predictions are visited by descending score
/// (input order among equal scores); each takes the eligible unmatched GT
/// with the highest IoU, lowest index on ties.
inline MatchResult match_detections(std::span<const Detection> preds, std::span<const Box> gts,
                                    const MatchRule& rule = {}) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  MatchResult r;
  r.matched_gt.assign(preds.size(), -1);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t i : order) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || !satisfies(rule, preds[i], gts[g])) continue;
      const double v = iou(preds[i].box(), gts[g]);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      taken[best] = true;
      r.matched_gt[i] = best;
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = static_cast<int>(gts.size()) - r.tp;
  return r;
}

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  Counts& operator+=(const MatchResult& m) {
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
    return *this;
  }
};

struct Scores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// A 0/0 ratio is 1 when the split is empty (TP = FP = FN = 0), else 0.
inline Scores precision_recall_f1(const Counts& c) {
  const bool vacuous = c.tp == 0 && c.fp == 0 && c.fn == 0;
  auto ratio = [&](double num, double den) { return den > 0 ? num / den : (vacuous ? 1.0 : 0.0); };
  Scores s;
  s.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  s.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

inline Scores precision_recall_f1(std::span<const MatchResult> results) {
  Counts c;
  for (const auto& m : results) c += m;
  return precision_recall_f1(c);
}

inline constexpr const char* kMetricsHeader = "split,criterion,threshold,TP,FP,FN,precision,recall,f1";

/// One metrics CSV row. threshold is the score threshold applied to predictions.
inline void write_metrics_row(std::ostream& out, const std::string& split, const MatchRule& rule, double threshold,
                              const Counts& c) {
  const Scores s = precision_recall_f1(c);
  const auto flags = out.flags();
  const auto prec = out.precision(17);
  out << split << ',' << to_string(rule.criterion) << ',' << threshold << ',' << c.tp << ',' << c.fp << ',' << c.fn
      << ',' << s.precision << ',' << s.recall << ',' << s.f1 << '\n';
  out.precision(prec);
  out.flags(flags);
}

}  // namespace vidalign::evaluation
