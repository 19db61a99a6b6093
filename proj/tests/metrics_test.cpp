// Copyright 2026 The sedgl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sedgl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

namespace sedgl {
namespace {

const EventVocabulary kDogCat({"Cat", "Dog"});

// Exhaustive oracle: tries every one-to-one assignment of predictions to
// references (or to nothing) and keeps the largest number of matched pairs.
long long brute_force_tp(const std::vector<DetectionEvent>& refs, const std::vector<DetectionEvent>& preds) {
  const auto ok = [](const DetectionEvent& r, const DetectionEvent& p) {
    const double len = r.offset - r.onset;
    return std::abs(p.onset - r.onset) <= 0.2 + 1e-9 &&
           std::abs(p.offset - r.offset) <= std::max(0.2, 0.2 * len) + 1e-9;
  };
  std::vector<char> used(refs.size(), 0);
  std::function<long long(std::size_t)> go = [&](std::size_t i) -> long long {
    if (i == preds.size()) return 0;
    long long best = go(i + 1);
    for (std::size_t j = 0; j < refs.size(); ++j) {
      if (used[j] || refs[j].label != preds[i].label || !ok(refs[j], preds[i])) continue;
      used[j] = 1;
      best = std::max(best, 1 + go(i + 1));
      used[j] = 0;
    }
    return best;
  };
  return go(0);
}

std::vector<DetectionEvent> random_events(std::mt19937& rng, const EventVocabulary& vocab, int max_per_class) {
  std::vector<DetectionEvent> out;
  std::uniform_real_distribution<double> on(0.0, 3.0), len(0.05, 1.5);
  for (int c = 0; c < vocab.size(); ++c) {
    const int n = static_cast<int>(rng() % (max_per_class + 1));
    for (int k = 0; k < n; ++k) {
      // Quantized to 50 ms so that collar boundaries are hit exactly.
      const double a = std::round(on(rng) * 20) / 20, l = std::round(len(rng) * 20) / 20 + 0.05;
      out.push_back({vocab.name(c), a, std::min(10.0, a + l)});
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

TEST(CollarTest, HandCases) {
  const DetectionEvent ref{"Dog", 1.00, 2.00};
  EXPECT_TRUE(within_collars(ref, {"Dog", 1.10, 2.05}, {}));
  EXPECT_FALSE(within_collars(ref, {"Dog", 1.30, 2.00}, {}));
  EXPECT_TRUE(within_collars(ref, {"Dog", 1.20, 2.20}, {}));   // both on the boundary
  const DetectionEvent longer{"Dog", 0.0, 5.0};                  // offset collar 1.0 s
  EXPECT_TRUE(within_collars(longer, {"Dog", 0.1, 4.05}, {}));
  EXPECT_FALSE(within_collars(longer, {"Dog", 0.1, 3.95}, {}));
}

TEST(MatchEventsTest, HandFixtures) {
  const auto tp = match_events({{"Dog", 1.00, 2.00}}, {{"Dog", 1.10, 2.05}}, kDogCat);
  EXPECT_EQ(tp[1].tp, 1);
  EXPECT_EQ(tp[1].fp, 0);
  EXPECT_EQ(tp[1].fn, 0);

  const auto miss = match_events({{"Dog", 1.00, 2.00}}, {{"Dog", 1.30, 2.00}}, kDogCat);
  EXPECT_EQ(miss[1].tp, 0);
  EXPECT_EQ(miss[1].fp, 1);
  EXPECT_EQ(miss[1].fn, 1);

  const auto wrong_class = match_events({{"Dog", 1.00, 2.00}}, {{"Cat", 1.00, 2.00}}, kDogCat);
  EXPECT_EQ(wrong_class[0].fp, 1);
  EXPECT_EQ(wrong_class[1].fn, 1);

  // Two predictions, one reference: one TP and one FP.
  const auto dup = match_events({{"Dog", 1.0, 2.0}}, {{"Dog", 1.0, 2.0}, {"Dog", 1.05, 2.0}}, kDogCat);
  EXPECT_EQ(dup[1].tp, 1);
  EXPECT_EQ(dup[1].fp, 1);

  const auto none = match_events({}, {}, kDogCat);
  for (const auto& k : none) EXPECT_EQ(k.tp + k.fp + k.fn, 0);
  EXPECT_EQ(make_report("event", kDogCat, none).macro_f1, 0.0);
}

TEST(MatchEventsTest, OptimalBeatsGreedyOnCrossedPairs) {
  // p1 fits r1 and r2, p2 fits only r1; greedy in onset order takes r1 for p1.
  const std::vector<DetectionEvent> refs = {{"Dog", 1.0, 2.0}, {"Dog", 1.2, 2.2}};
  const std::vector<DetectionEvent> preds = {{"Dog", 1.1, 2.1}, {"Dog", 1.15, 1.85}};
  const auto opt = match_events(refs, preds, kDogCat);
  const auto greedy = match_events(refs, preds, kDogCat, {}, 10.0, MatchStrategy::kGreedy);
  EXPECT_EQ(opt[1].tp, 2);
  EXPECT_EQ(greedy[1].tp, 1);
  EXPECT_EQ(opt[1].tp, brute_force_tp(refs, preds));
}

TEST(MatchEventsTest, RejectsEventsOutsideClip) {
  EXPECT_THROW(match_events({{"Dog", 9.0, 10.5}}, {}, kDogCat), ValidationError);
  EXPECT_THROW(match_events({}, {{"Dog", 2.0, 2.0}}, kDogCat), ValidationError);
  EXPECT_THROW(match_events({{"Bird", 1.0, 2.0}}, {}, kDogCat), Error);
}

TEST(EventF1Test, MatchesBruteForceOracle) {
  std::mt19937 rng(2024);
  int greedy_differs = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int clips = 1 + static_cast<int>(rng() % 3);
    std::vector<StrongAnnotation> refs, preds;
    std::vector<long long> want(kDogCat.size(), 0);
    for (int k = 0; k < clips; ++k) {
      const std::string id = "c" + std::to_string(k);
      refs.push_back({id, random_events(rng, kDogCat, 4)});
      preds.push_back({id, random_events(rng, kDogCat, 4)});
      for (int c = 0; c < kDogCat.size(); ++c) {
        std::vector<DetectionEvent> r, p;
        for (const auto& e : refs.back().events) if (e.label == kDogCat.name(c)) r.push_back(e);
        for (const auto& e : preds.back().events) if (e.label == kDogCat.name(c)) p.push_back(e);
        want[c] += brute_force_tp(r, p);
      }
    }
    const auto report = event_based_f1(refs, preds, kDogCat);
    const auto greedy = event_based_f1(refs, preds, kDogCat, {}, {}, 10.0, MatchStrategy::kGreedy);
    for (int c = 0; c < kDogCat.size(); ++c) {
      EXPECT_EQ(report.per_class[c].counts.tp, want[c]) << "trial " << trial;
      if (greedy.per_class[c].counts.tp != want[c]) ++greedy_differs;
    }
  }
  RecordProperty("greedy_differs", greedy_differs);
}

TEST(EventF1Test, PerfectAndHalf) {
  const std::vector<StrongAnnotation> refs = {{"a", {{"Dog", 1.0, 2.0}, {"Cat", 3.0, 4.0}}}};
  EXPECT_DOUBLE_EQ(event_based_f1(refs, refs, kDogCat).macro_f1, 1.0);
  const std::vector<StrongAnnotation> preds = {{"a", {{"Dog", 1.0, 2.0}}}};
  EXPECT_DOUBLE_EQ(event_based_f1(refs, preds, kDogCat).macro_f1, 0.5);
}

TEST(EventF1Test, SymmetryAndPermutationInvariance) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<StrongAnnotation> refs, preds;
    for (int k = 0; k < 3; ++k) {
      refs.push_back({"c" + std::to_string(k), random_events(rng, kDogCat, 3)});
      preds.push_back({"c" + std::to_string(k), random_events(rng, kDogCat, 3)});
    }
    const auto a = event_based_f1(refs, preds, kDogCat);
    // Swapping sides is only symmetric when the offset collar ignores the
    // reference length.
    CollarConfig fixed;
    fixed.offset_collar_rel = 0.0;
    const auto fa = event_based_f1(refs, preds, kDogCat, fixed), fb = event_based_f1(preds, refs, kDogCat, fixed);
    for (int c = 0; c < 2; ++c) {
      EXPECT_DOUBLE_EQ(fa.per_class[c].precision, fb.per_class[c].recall);
      EXPECT_DOUBLE_EQ(fa.per_class[c].f1, fb.per_class[c].f1);
    }
    auto rp = refs, pp = preds;
    std::reverse(rp.begin(), rp.end());
    std::rotate(pp.begin(), pp.begin() + 1, pp.end());
    EXPECT_DOUBLE_EQ(event_based_f1(rp, pp, kDogCat).macro_f1, a.macro_f1);
    CollarConfig wide;
    wide.onset_collar = 0.5;
    wide.offset_collar_abs = 0.5;
    const auto w = event_based_f1(refs, preds, kDogCat, wide);
    for (int c = 0; c < 2; ++c) EXPECT_GE(w.per_class[c].counts.tp, a.per_class[c].counts.tp);
  }
}

TEST(EventF1Test, MissingClipOnOneSide) {
  const std::vector<StrongAnnotation> refs = {{"a", {{"Dog", 1.0, 2.0}}}};
  const std::vector<StrongAnnotation> preds = {{"b", {{"Dog", 1.0, 2.0}}}};
  const auto r = event_based_f1(refs, preds, kDogCat);
  EXPECT_EQ(r.per_class[1].counts.fp, 1);
  EXPECT_EQ(r.per_class[1].counts.fn, 1);
}

TEST(SegmentF1Test, HandCases) {
  const std::vector<StrongAnnotation> full = {{"a", {{"Dog", 0.0, 10.0}}}};
  EXPECT_EQ(segment_based_f1(full, full, kDogCat).per_class[1].counts.tp, 10);

  const std::vector<StrongAnnotation> ref = {{"a", {{"Dog", 0.0, 1.0}}}};
  const std::vector<StrongAnnotation> pred = {{"a", {{"Dog", 0.9, 1.1}}}};
  const auto r = segment_based_f1(ref, pred, kDogCat);
  EXPECT_EQ(r.per_class[1].counts.tp, 1);
  EXPECT_EQ(r.per_class[1].counts.fp, 1);
  EXPECT_EQ(r.per_class[1].counts.fn, 0);

  const std::vector<StrongAnnotation> empty = {{"a", {}}};
  EXPECT_EQ(segment_based_f1(empty, empty, kDogCat).macro_f1, 0.0);
  EXPECT_THROW(segment_based_f1(empty, empty, kDogCat, 0.0), ValidationError);
}

TEST(ClipF1Test, HandCases) {
  const EventVocabulary one({"A"});
  EXPECT_DOUBLE_EQ(clip_f1({{1}, {0}}, {{1}, {0}}, one).macro_f1, 1.0);
  EXPECT_DOUBLE_EQ(clip_f1({{1}, {1}}, {{0}, {0}}, one).macro_f1, 0.0);
  // 2 TP, 1 FP, 1 FN.
  const auto r = clip_f1({{1}, {1}, {0}, {1}}, {{1}, {1}, {1}, {0}}, one);
  EXPECT_NEAR(r.macro_f1, 2.0 / 3.0, 1e-12);
  EXPECT_THROW(clip_f1({{1}}, {}, one), ValidationError);
  EXPECT_THROW(clip_f1({{1, 0}}, {{1, 0}}, one), ValidationError);
}

TEST(ReportTest, TsvAndSummary) {
  const auto r = make_report("event", kDogCat, {{1, 0, 1}, {0, 0, 0}});
  const auto tsv = format_report_tsv(r);
  EXPECT_NE(tsv.find("Cat\t1\t0\t1\t1.000000\t0.500000\t0.666667\n"), std::string::npos);
  EXPECT_NE(tsv.find("macro\t\t\t\t\t\t0.333333\n"), std::string::npos);
  EXPECT_NE(format_report_summary(r).find("event-based macro F1: 33.33%"), std::string::npos);
}

}  // namespace
}  // namespace sedgl
