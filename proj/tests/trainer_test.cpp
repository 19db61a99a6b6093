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

#include "sedgl/trainer.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace sedgl {
namespace {

constexpr int kFrames = 16, kMels = 8;

DFAssignment full_df(int d, int classes) {
  DFAssignment a;
  a.d = d;
  a.k.assign(classes, d);
  a.f.assign(classes, 1.0);
  return a;
}

ModelConfig tiny_ps() {
  EncoderConfig e = EncoderConfig::ps(kMels, kFrames);
  e.channels = {2, 2, 2};
  e.freq_pool = {2, 2, 1};
  return ModelConfig{e, 2, full_df(e.output_dim(), 2)};
}

ModelConfig tiny_pt() {
  EncoderConfig e = EncoderConfig::pt(kMels, kFrames);
  e.channels = {2, 2, 2};
  e.time_pool = {2, 2, 1};
  e.freq_pool = {2, 2, 1};
  return ModelConfig{e, 2, full_df(e.output_dim(), 2)};
}

FeatureMatrix noise_clip(std::mt19937_64& rng, const std::string& id, double bias) {
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix m(kFrames, kMels);
  m.clip_id = id;
  for (auto& v : m.values) v = static_cast<float>(g(rng) + bias);
  return m;
}

TrainingData tiny_data(int labeled = 6, int unlabeled = 4, int validation = 2) {
  std::mt19937_64 rng(17);
  TrainingData d;
  for (int i = 0; i < labeled; ++i) {
    d.labeled.push_back(noise_clip(rng, "l" + std::to_string(i), i % 2));
    d.labeled_tags.push_back({i % 2, 1 - i % 2});
  }
  for (int i = 0; i < unlabeled; ++i) d.unlabeled.push_back(noise_clip(rng, "u" + std::to_string(i), 0.5));
  for (int i = 0; i < validation; ++i) {
    d.validation.push_back(noise_clip(rng, "v" + std::to_string(i), i % 2));
    d.validation_refs.push_back({"v" + std::to_string(i), {{i % 2 ? "A" : "B", 0.0, 0.2}}});
  }
  return d;
}

TrainerSetup tiny_setup(TrainMode mode, int epochs) {
  TrainerSetup s;
  s.mode = mode;
  s.ps = tiny_ps();
  if (mode == TrainMode::kGuided) s.pt = tiny_pt();
  s.gl.batch_size = 4;
  s.gl.max_epochs = epochs;
  s.gl.start_epoch = 1;
  s.windows = fixed_windows(2, 3);
  s.vocab = EventVocabulary({"A", "B"});
  s.seed = 5;
  return s;
}

TEST(ScheduleTest, UnsupervisedWeightClosedForm) {
  for (double gamma : {1.0, 0.996, 0.99, 0.98})
    for (int e = 1; e <= 200; ++e) {
      const double want = e <= 5 ? 0.0 : 1.0 - std::pow(gamma, e - 5);
      EXPECT_NEAR(unsupervised_weight(e, 5, gamma), want, 1e-15);
      if (gamma == 1.0) {
        EXPECT_EQ(unsupervised_weight(e, 5, gamma), 0.0);
      }
    }
  EXPECT_NEAR(unsupervised_weight(6, 5, 0.99), 0.01, 1e-15);
}

TEST(ScheduleTest, LearningRateSteps) {
  GLConfig cfg;
  EXPECT_DOUBLE_EQ(learning_rate(1, cfg), 0.0018);
  EXPECT_DOUBLE_EQ(learning_rate(10, cfg), 0.0018);
  EXPECT_DOUBLE_EQ(learning_rate(11, cfg), 0.0018 * 0.8);
  EXPECT_DOUBLE_EQ(learning_rate(21, cfg), 0.0018 * 0.64);
}

TEST(ScheduleTest, ConfigValidation) {
  GLConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.gamma = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(LossTest, BinaryCrossEntropy) {
  const std::vector<double> y = {1, 0}, p = {0.8, 0.3};
  EXPECT_NEAR(bce(y, p), -(std::log(0.8) + std::log(0.7)) / 2, 1e-12);
  const std::vector<double> sure = {1.0, 0.0};
  EXPECT_LT(bce(y, sure), 1e-6);
  EXPECT_TRUE(std::isfinite(bce(sure, std::vector<double>{0.0, 1.0})));
  EXPECT_THROW(bce(y, std::vector<double>{0.5}), Error);
}

TEST(AugmentTest, TimeShiftPadsWithEdges) {
  FeatureMatrix m(4, 1);
  m.values = {1, 2, 3, 4};
  EXPECT_EQ(time_shift(m, 1).values, (std::vector<float>{1, 1, 2, 3}));
  EXPECT_EQ(time_shift(m, -2).values, (std::vector<float>{3, 4, 4, 4}));
  EXPECT_EQ(time_shift(m, 0).values, m.values);
}

TEST(AugmentTest, DeterministicPerSeed) {
  std::mt19937_64 rng(1);
  const auto x = noise_clip(rng, "x", 0);
  Augmenter a(AugmentConfig{}, 9), b(AugmentConfig{}, 9);
  EXPECT_EQ(a(x).values, b(x).values);
  Augmenter off(AugmentConfig{false, 0, false, 0.0}, 9);
  EXPECT_EQ(off(x).values, x.values);
}

TEST(MinibatchTest, ProportionsAndCoverage) {
  std::mt19937_64 rng(3);
  const auto batches = plan_minibatches(200, 400, 64, rng);
  std::vector<int> seen_l(200, 0), seen_u(400, 0);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    int nl = 0;
    for (const auto& it : batches[b]) {
      (it.labeled ? seen_l : seen_u)[it.index]++;
      nl += it.labeled;
    }
    if (b + 1 < batches.size()) {
      EXPECT_EQ(batches[b].size(), 64u);
      EXPECT_NEAR(nl, 64.0 / 3.0, 1.0);
    }
  }
  for (int v : seen_l) EXPECT_EQ(v, 1);
  for (int v : seen_u) EXPECT_EQ(v, 1);
  const auto only = plan_minibatches(5, 0, 2, rng);
  EXPECT_EQ(only.size(), 3u);
}

TEST(GuidedStepTest, TeacherUntouchedByPseudoLabelsWhenWeightIsZero) {
  const auto data = tiny_data();
  Model ps(tiny_ps()), pt(tiny_pt());
  ps.init(1);
  pt.init(2);
  Augmenter aug(AugmentConfig{}, 3);
  auto pt_params = pt.params();
  for (auto& p : pt_params) std::fill(p.grad.begin(), p.grad.end(), 0.0f);
  for (auto& p : ps.params()) std::fill(p.grad.begin(), p.grad.end(), 0.0f);
  const std::vector<BatchItem> unlabeled = {{false, 0}, {false, 1}, {false, 2}};
  const auto L = gl_gradients(data, unlabeled, ps, pt, 0.0, aug);
  EXPECT_EQ(L.unsupervised_pt, 0.0);
  EXPECT_GT(L.unsupervised_ps, 0.0);
  for (const auto& p : pt.params())
    for (float g : p.grad) ASSERT_EQ(g, 0.0f) << p.name;
  double student_norm = 0;
  for (const auto& p : ps.params())
    for (float g : p.grad) student_norm += std::abs(g);
  EXPECT_GT(student_norm, 0.0);

  // With a > 0 the teacher receives a gradient from the same batch.
  for (auto& p : pt.params()) std::fill(p.grad.begin(), p.grad.end(), 0.0f);
  for (auto& p : ps.params()) std::fill(p.grad.begin(), p.grad.end(), 0.0f);
  gl_gradients(data, unlabeled, ps, pt, 0.5, aug);
  double teacher_norm = 0;
  for (const auto& p : pt.params())
    for (float g : p.grad) teacher_norm += std::abs(g);
  EXPECT_GT(teacher_norm, 0.0);
}

TEST(HistoryTest, RoundTrip) {
  EpochRecord r;
  r.epoch = 3;
  r.lr = 0.00144;
  r.a = 0.0199;
  r.loss_ps = 0.5;
  r.loss_pt = 0.25;
  r.ps = {0.9, 0.75, 0.8};
  r.pt_clip_f1 = 0.95;
  const auto text = format_history({r, r});
  const auto back = parse_history(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].epoch, 3);
  EXPECT_DOUBLE_EQ(back[0].lr, 0.00144);
  EXPECT_DOUBLE_EQ(back[1].ps.event_f1, 0.75);
  EXPECT_EQ(format_history(back), text);
  EXPECT_THROW(parse_history(history_header() + "1\t2\n"), ParseError);
}

TEST(TrainerTest, PatienceStopsAfterTwentyFlatEpochs) {
  auto data = tiny_data(4, 0, 0);
  auto setup = tiny_setup(TrainMode::kAtpDf, 100);
  Trainer tr(data, setup);
  tr.fit();
  EXPECT_EQ(tr.epoch(), 21);
  EXPECT_EQ(tr.best_epoch(), 1);
  EXPECT_TRUE(tr.finished());
  EXPECT_THROW(tr.run_epoch(), Error);
}

TEST(TrainerTest, AtpModeHasNoTeacher) {
  const auto data = tiny_data();
  Trainer tr(data, tiny_setup(TrainMode::kAtpDf, 2));
  tr.fit();
  EXPECT_EQ(tr.pt(), nullptr);
  for (const auto& r : tr.history()) {
    EXPECT_EQ(r.a, 0.0);
    EXPECT_EQ(r.loss_pt, 0.0);
  }
}

TEST(TrainerTest, GuidedRequiresCoarserTeacher) {
  const auto data = tiny_data();
  auto setup = tiny_setup(TrainMode::kGuided, 2);
  setup.pt = tiny_ps();
  EXPECT_THROW(Trainer(data, setup), ValidationError);
  setup.pt.reset();
  EXPECT_THROW(Trainer(data, setup), ValidationError);
}

TEST(TrainerTest, DeterministicGivenSeed) {
  const auto data = tiny_data();
  Trainer a(data, tiny_setup(TrainMode::kGuided, 3)), b(data, tiny_setup(TrainMode::kGuided, 3));
  a.fit();
  b.fit();
  EXPECT_EQ(format_history(a.history()), format_history(b.history()));
  EXPECT_GT(a.history().back().a, 0.0);
}

TEST(TrainerTest, ResumeFromStateMatchesUninterruptedRun) {
  const auto data = tiny_data();
  Trainer full(data, tiny_setup(TrainMode::kGuided, 5));
  full.fit();

  Trainer first(data, tiny_setup(TrainMode::kGuided, 5));
  for (int e = 0; e < 3; ++e) first.run_epoch();
  const auto state = first.encode_state();
  Trainer resumed(data, tiny_setup(TrainMode::kGuided, 5));
  resumed.decode_state(state);
  EXPECT_EQ(resumed.epoch(), 3);
  resumed.fit();
  EXPECT_EQ(format_history(resumed.history()), format_history(full.history()));
  EXPECT_EQ(resumed.best_epoch(), full.best_epoch());
  EXPECT_THROW(resumed.decode_state("junk"), ParseError);
}

}  // namespace
}  // namespace sedgl
