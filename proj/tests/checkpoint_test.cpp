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

#include "sedgl/checkpoint.hpp"

#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace sedgl {
namespace {

ModelConfig small_config() {
  EncoderConfig e = EncoderConfig::ps(8, 12);
  e.channels = {2, 3, 2};
  e.freq_pool = {2, 2, 2};
  DFAssignment df;
  df.d = e.output_dim();
  df.k = {1, 2};
  df.f = {0.5, 1.0};
  return ModelConfig{e, 2, df};
}

FeatureMatrix input() {
  std::mt19937 rng(4);
  std::normal_distribution<float> g;
  FeatureMatrix m(12, 8);
  for (auto& v : m.values) v = g(rng);
  return m;
}

TEST(CheckpointTest, RoundTripReproducesOutputs) {
  const EventVocabulary vocab({"A", "B"});
  Model m(small_config());
  m.init(3);
  // Move the running statistics away from their initial values.
  const auto x = input();
  m.forward({&x}, true);
  const auto bytes = encode_checkpoint(m, vocab, 1234, {{"epoch", 7}});
  auto loaded = decode_checkpoint(bytes);
  EXPECT_EQ(loaded.vocab, vocab);
  EXPECT_EQ(loaded.feature_fingerprint, 1234u);
  EXPECT_EQ(loaded.info.at("epoch").get<int>(), 7);
  EXPECT_EQ(loaded.model.config().df.k, (std::vector<int>{1, 2}));
  const auto a = m.forward({&x}, false), b = loaded.model.forward({&x}, false);
  EXPECT_EQ(a[0].clip_probs, b[0].clip_probs);
  EXPECT_EQ(a[0].frame_probs, b[0].frame_probs);
  EXPECT_EQ(encode_checkpoint(loaded.model, vocab, 1234, {{"epoch", 7}}), bytes);
}

TEST(CheckpointTest, FileRoundTripAndCompatibility) {
  testing::TempDir dir("ckpt");
  const EventVocabulary vocab({"A", "B"});
  Model m(small_config());
  m.init(1);
  FeatureConfig fc;
  const auto path = (dir / "m.ckpt").string();
  save_checkpoint(path, m, vocab, fc.fingerprint());
  const auto loaded = load_checkpoint(path);
  EXPECT_NO_THROW(check_compatible(loaded, vocab, fc));
  EXPECT_THROW(check_compatible(loaded, EventVocabulary({"A", "C"}), fc), ValidationError);
  auto other = fc;
  other.n_mels = 32;
  EXPECT_THROW(check_compatible(loaded, vocab, other), ValidationError);
}

TEST(CheckpointTest, RejectsCorruptInput) {
  const EventVocabulary vocab({"A", "B"});
  Model m(small_config());
  m.init(1);
  const auto bytes = encode_checkpoint(m, vocab, 0);
  EXPECT_THROW(decode_checkpoint("nope"), ParseError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 4)), ParseError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), ParseError);
  auto wrong_version = bytes;
  wrong_version[4] = 9;
  EXPECT_THROW(decode_checkpoint(wrong_version), ParseError);
}

}  // namespace
}  // namespace sedgl
