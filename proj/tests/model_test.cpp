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

#include "sedgl/model.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace sedgl {
namespace {

DFAssignment df_with(std::vector<int> k, int d) {
  DFAssignment a;
  a.d = d;
  a.k = std::move(k);
  a.f.assign(a.k.size(), 1.0);
  return a;
}

EncoderConfig tiny_encoder(int frames = 8, int mels = 8) {
  EncoderConfig e = EncoderConfig::ps(mels, frames);
  e.channels = {2, 3, 2};
  e.time_pool = {1, 2, 1};
  e.freq_pool = {2, 1, 2};
  return e;
}

TEST(EncoderConfigTest, ReferenceShapes) {
  const auto ps = EncoderConfig::ps(), pt = EncoderConfig::pt();
  EXPECT_EQ(ps.output_frames(), 500);
  EXPECT_EQ(ps.output_dim(), 160);
  EXPECT_EQ(pt.output_frames(), 7);  // 500 / 4 / 4 / 4 with floor at each stage
  EXPECT_EQ(pt.output_dim(), 160);
  EXPECT_LT(ps.total_time_pool(), pt.total_time_pool());
  auto bad = ps;
  bad.channels = {4, 4};
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(EncoderTest, OutputShapesAndFiniteOnZeroInput) {
  for (auto e : {EncoderConfig::ps(16, 128), EncoderConfig::pt(16, 128)}) {
    e.channels = {4, 4, 8};
    e.freq_pool = {2, 2, 2};
    const int d = e.output_dim();
    SedModel<float> m(ModelConfig{e, 3, df_with({d, d, d}, d)});
    m.init(5);
    nn::Tensor<float> x(2, 1, 128, 16), out;
    m.encode(x, out, true);  // warm the batch-norm statistics
    m.encode(x, out, false);
    EXPECT_EQ(out.h, e.output_frames());
    EXPECT_EQ(out.w, d);
    for (float v : out.data) EXPECT_TRUE(std::isfinite(v));
  }
  SedModel<float> m(ModelConfig{tiny_encoder(), 1, df_with({4}, 4)});
  nn::Tensor<float> wrong(1, 1, 7, 8), out;
  EXPECT_THROW(m.encode(wrong, out, false), ValidationError);
}

TEST(AttentionTest, IdenticalFramesGiveUniformWeights) {
  AttentionHeads<double> heads(2, df_with({3, 2}, 3));
  std::mt19937_64 rng(1);
  heads.init(rng);
  std::vector<double> x = {0.5, -1, 2, 0.5, -1, 2, 0.5, -1, 2, 0.5, -1, 2};
  ProbabilitySet p;
  heads.forward(x, 4, p, nullptr);
  for (int c = 0; c < 2; ++c)
    for (int t = 0; t < 4; ++t) EXPECT_NEAR(p.attn(c, t), 0.25, 1e-12);
}

TEST(AttentionTest, ClosedFormTwoFrameSoftmax) {
  const int d = 4;
  AttentionHeads<double> heads(1, df_with({d}, d));
  heads.attention_weight() = {1, 0, 0, 0};
  std::vector<double> x(2 * d, 0.0);
  x[0] = d * std::log(3.0);  // s1 - s2 = d ln 3
  ProbabilitySet p;
  heads.forward(x, 2, p, nullptr);
  EXPECT_NEAR(p.attn(0, 0), 0.75, 1e-12);
  EXPECT_NEAR(p.attn(0, 1), 0.25, 1e-12);
  // Frame probability is the sigmoid of the unscaled score.
  EXPECT_NEAR(p.frame(0, 0), 1 / (1 + std::exp(-d * std::log(3.0))), 1e-12);
  EXPECT_NEAR(p.frame(1, 0), 0.5, 1e-12);
  // h = 0.75 x_1 + 0.25 x_2.
  EXPECT_NEAR(p.contextual[0], 0.75 * x[0], 1e-12);
}

TEST(ClassifierTest, SigmoidExamples) {
  AttentionHeads<double> heads(3, df_with({2, 2, 2}, 2));
  std::vector<double> x = {1, 2, 3, 4};
  ProbabilitySet p;
  heads.forward(x, 2, p, nullptr);
  for (double v : p.clip_probs) EXPECT_DOUBLE_EQ(v, 0.5);
  heads.classifier_bias() = {-20, 0, 0};
  heads.classifier_weight() = {0, 0, 0.1, 0, 0.2, 0};
  heads.forward(x, 2, p, nullptr);
  EXPECT_LT(p.clip_probs[0], 1e-8);
  EXPECT_LT(p.clip_probs[1], p.clip_probs[2]);
  EXPECT_GT(sigmoid(-800.0), 0.0 - 1e-300);
  EXPECT_DOUBLE_EQ(sigmoid(800.0), 1.0);
}

TEST(PredictionTest, ThresholdIsInclusiveAndGatesFrames) {
  EXPECT_EQ(clip_prediction(std::vector<double>{0.5, 0.49, 0.0}, 0.5), (std::vector<int>{1, 0, 0}));
  EXPECT_EQ(clip_prediction(std::vector<double>{0, 0}, 0.5), (std::vector<int>{0, 0}));
  // 2 frames x 2 classes.
  const std::vector<double> frames = {0.7, 0.9, 0.3, 0.95};
  EXPECT_EQ(frame_prediction(frames, std::vector<int>{1, 0}, 0.5), (std::vector<int>{1, 0, 0, 0}));
  EXPECT_THROW(frame_prediction(frames, std::vector<int>{1, 0, 1}, 0.5), ValidationError);
}

TEST(AttentionTest, MaskedCoordinatesDoNotAffectTheirClass) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 1);
  const int d = 6, frames = 5;
  AttentionHeads<double> heads(3, df_with({2, 6, 4}, d));
  heads.init(rng);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(frames * d);
    for (auto& v : x) v = g(rng);
    ProbabilitySet base;
    heads.forward(x, frames, base, nullptr);
    auto y = x;
    for (int t = 0; t < frames; ++t)
      for (int j = 2; j < d; ++j) y[t * d + j] += 10 * g(rng);
    ProbabilitySet moved;
    heads.forward(y, frames, moved, nullptr);
    EXPECT_EQ(base.clip_probs[0], moved.clip_probs[0]);
    for (int t = 0; t < frames; ++t) {
      EXPECT_EQ(base.attn(0, t), moved.attn(0, t));
      EXPECT_EQ(base.frame(t, 0), moved.frame(t, 0));
    }
  }
}

// Loss = sum_c g_c * logit_c + sum_{t,c} q_tc * frame_logit_tc, evaluated
// from the forward outputs so that finite differences need no access to the
// cache.
double head_loss(const AttentionHeads<double>& heads, const std::vector<double>& x, int frames,
                 const std::vector<double>& g, const std::vector<double>& q) {
  ProbabilitySet p;
  heads.forward(x, frames, p, nullptr);
  double s = 0;
  for (int c = 0; c < p.classes; ++c) s += g[c] * std::log(p.clip_probs[c] / (1 - p.clip_probs[c]));
  for (int t = 0; t < frames; ++t)
    for (int c = 0; c < p.classes; ++c) s += q[t * p.classes + c] * std::log(p.frame(t, c) / (1 - p.frame(t, c)));
  return s;
}

TEST(AttentionTest, GradientCheckDimFourThreeFrames) {
  const int d = 4, frames = 3, classes = 2;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0, 1);
  AttentionHeads<double> heads(classes, df_with({4, 3}, d));
  heads.init(rng);
  for (auto& v : heads.attention_bias()) v = 0.3 * nd(rng);
  for (auto& v : heads.classifier_bias()) v = 0.3 * nd(rng);
  std::vector<double> x(frames * d), g(classes), q(frames * classes);
  for (auto& v : x) v = nd(rng);
  for (auto& v : g) v = nd(rng);
  for (auto& v : q) v = nd(rng);

  AttentionHeads<double>::Cache cache;
  ProbabilitySet p;
  heads.forward(x, frames, p, &cache);
  std::vector<nn::ParamRef<double>> params;
  heads.collect(params);
  std::vector<double> dx(x.size());
  heads.backward(cache, g, q, dx);

  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-8, std::max(std::abs(a), std::abs(b))); };
  const double h = 1e-6;
  for (auto& prm : params) {
    for (std::size_t i = 0; i < prm.value.size(); ++i) {
      const double keep = prm.value[i];
      prm.value[i] = keep + h;
      const double up = head_loss(heads, x, frames, g, q);
      prm.value[i] = keep - h;
      const double down = head_loss(heads, x, frames, g, q);
      prm.value[i] = keep;
      const double num = (up - down) / (2 * h);
      if (std::abs(num) < 1e-9 && std::abs(prm.grad[i]) < 1e-9) continue;  // masked coordinate
      EXPECT_LT(rel(prm.grad[i], num), 1e-4) << prm.name << "[" << i << "]";
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto y = x;
    y[i] += h;
    const double up = head_loss(heads, y, frames, g, q);
    y[i] -= 2 * h;
    const double down = head_loss(heads, y, frames, g, q);
    EXPECT_LT(rel(dx[i], (up - down) / (2 * h)), 1e-4) << "x[" << i << "]";
  }
}

TEST(ModelTest, EndToEndGradientCheck) {
  ModelConfig cfg{tiny_encoder(), 2, df_with({4, 2}, 4)};
  SedModel<double> m(cfg);
  m.init(12);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd(0, 1);
  nn::Tensor<double> x(2, 1, 8, 8);
  for (auto& v : x.data) v = nd(rng);
  std::vector<double> g(2 * 2);
  for (auto& v : g) v = nd(rng);
  auto loss = [&]() {
    SedModel<double> probe = m;
    const auto out = probe.forward_tensor(x, true);
    double s = 0;
    for (int i = 0; i < 2; ++i)
      for (int c = 0; c < 2; ++c) s += g[i * 2 + c] * std::log(out[i].clip_probs[c] / (1 - out[i].clip_probs[c]));
    return s;
  };
  for (auto& p : m.params()) std::fill(p.grad.begin(), p.grad.end(), 0.0);
  m.forward_tensor(x, true);
  m.backward(g);
  int checked = 0;
  for (auto& p : m.params()) {
    for (std::size_t i = 0; i < p.value.size(); i += 3) {
      const double keep = p.value[i];
      p.value[i] = keep + 1e-6;
      const double up = loss();
      p.value[i] = keep - 1e-6;
      const double down = loss();
      p.value[i] = keep;
      const double num = (up - down) / 2e-6;
      // Conv biases ahead of batch norm have an exactly zero gradient, so the
      // floor sits above central-difference rounding noise.
      const double scale = std::max({1e-5, std::abs(num), std::abs(p.grad[i])});
      EXPECT_LT(std::abs(num - p.grad[i]) / scale, 1e-4) << p.name << "[" << i << "]";
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(ModelTest, InferenceIsDeterministic) {
  ModelConfig cfg{tiny_encoder(), 2, df_with({4, 4}, 4)};
  Model m(cfg);
  m.init(3);
  FeatureMatrix f(8, 8);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = std::sin(0.3f * i);
  const auto a = m.forward({&f}, false), b = m.forward({&f}, false);
  EXPECT_EQ(a[0].clip_probs, b[0].clip_probs);
  EXPECT_EQ(a[0].frame_probs, b[0].frame_probs);
}

// Closed-form count: batch-norm gamma/beta, conv weights and biases, and two
// (d + 1)-sized vectors per class in the heads.
std::size_t expected_params(const EncoderConfig& e, int classes) {
  std::size_t n = 2 * e.n_mels;
  int cin = 1;
  for (int b = 0; b < 3; ++b) {
    const std::size_t k = e.kernels[b];
    n += cin * e.channels[b] * k * k + e.channels[b] + 2 * e.channels[b];
    cin = e.channels[b];
  }
  return n + 2 * classes * (e.output_dim() + 1);
}

TEST(ModelTest, ParameterCounts) {
  const auto ps = EncoderConfig::ps(), pt = EncoderConfig::pt();
  SedModel<float> mps(ModelConfig{ps, 10, full_assignment(10, 160)});
  SedModel<float> mpt(ModelConfig{pt, 10, full_assignment(10, 160)});
  EXPECT_EQ(count_parameters(mps), expected_params(ps, 10));
  EXPECT_EQ(count_parameters(mpt), expected_params(pt, 10));
  EXPECT_GT(count_parameters(mps), count_parameters(mpt));
  // One class, d = 160: attention w_c + b_c is 161 scalars.
  AttentionHeads<float> one(1, full_assignment(1, 160));
  EXPECT_EQ(one.num_params(), 2 * 161u);
  auto wider = ps;
  wider.channels[1] *= 2;
  SedModel<float> mw(ModelConfig{wider, 10, full_assignment(10, 160)});
  EXPECT_GT(count_parameters(mw), count_parameters(mps));
}

TEST(ModelTest, ConfigMismatchIsRejected) {
  EXPECT_THROW(SedModel<float>(ModelConfig{tiny_encoder(), 2, df_with({4, 4}, 5)}), ValidationError);
  EXPECT_THROW(SedModel<float>(ModelConfig{tiny_encoder(), 3, df_with({4, 4}, 4)}), ValidationError);
}

}  // namespace
}  // namespace sedgl
