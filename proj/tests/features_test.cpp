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

#include "sedgl/features.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace sedgl {
namespace {

Waveform sine(double hz, double seconds, int sr, double amp = 0.5) {
  Waveform w{std::vector<float>(static_cast<std::size_t>(seconds * sr)), sr};
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = static_cast<float>(amp * std::sin(2 * std::numbers::pi * hz * i / sr));
  return w;
}

// Direct evaluation of the log-mel value of one frame: explicit DFT sums and
// triangular filters built from the Slaney mel formulas.
class NaiveLogMel {
 public:
  explicit NaiveLogMel(const FeatureConfig& c) : c_(c) {
    auto to_mel = [](double f) { return f < 1000 ? 3 * f / 200 : 15 + 27 * std::log(f / 1000) / std::log(6.4); };
    auto to_hz = [](double m) { return m < 15 ? 200 * m / 3 : 1000 * std::exp((m - 15) * std::log(6.4) / 27); };
    const double top = to_mel(c.sample_rate / 2.0);
    for (int i = 0; i < c.n_mels + 2; ++i) edges_.push_back(to_hz(top * i / (c.n_mels + 1)));
  }

  std::vector<double> frame(const std::vector<float>& x, int t) const {
    const int win = static_cast<int>(std::lround(c_.sample_rate * c_.frame_length_ms / 1000));
    const int hop = static_cast<int>(std::lround(c_.sample_rate * c_.hop_ms / 1000));
    std::vector<double> buf(c_.fft_size, 0.0);
    for (int i = 0; i < win; ++i) {
      const long long k = static_cast<long long>(t) * hop - win / 2 + i;
      const double hann = std::pow(std::sin(std::numbers::pi * i / win), 2);
      if (k >= 0 && k < static_cast<long long>(x.size())) buf[i] = x[k] * hann;
    }
    std::vector<double> mag(c_.fft_size / 2 + 1);
    for (std::size_t b = 0; b < mag.size(); ++b) {
      std::complex<double> s = 0;
      for (int n = 0; n < c_.fft_size; ++n)
        s += buf[n] * std::polar(1.0, -2 * std::numbers::pi * static_cast<double>(b) * n / c_.fft_size);
      mag[b] = std::abs(s);
    }
    std::vector<double> out(c_.n_mels);
    for (int m = 0; m < c_.n_mels; ++m) {
      double acc = 0;
      for (std::size_t b = 0; b < mag.size(); ++b) {
        const double f = b * static_cast<double>(c_.sample_rate) / c_.fft_size;
        double wgt = 0;
        if (f > edges_[m] && f <= edges_[m + 1]) wgt = (f - edges_[m]) / (edges_[m + 1] - edges_[m]);
        else if (f > edges_[m + 1] && f < edges_[m + 2]) wgt = (edges_[m + 2] - f) / (edges_[m + 2] - edges_[m + 1]);
        acc += wgt * 2 / (edges_[m + 2] - edges_[m]) * mag[b];
      }
      out[m] = std::log(std::max(acc, c_.log_floor));
    }
    return out;
  }

  int band_containing(double hz) const {
    // Band whose triangle peaks closest to hz.
    int best = 0;
    for (int m = 1; m < c_.n_mels; ++m)
      if (std::abs(edges_[m + 1] - hz) < std::abs(edges_[best + 1] - hz)) best = m;
    return best;
  }

 private:
  FeatureConfig c_;
  std::vector<double> edges_;
};

TEST(FeatureConfigTest, ReferenceGeometry) {
  FeatureConfig c;
  EXPECT_EQ(c.window_samples(), 1764);
  EXPECT_EQ(c.hop_samples(), 882);
  EXPECT_DOUBLE_EQ(c.target_frames * c.hop_ms, 10000.0);
  EXPECT_NO_THROW(c.validate());
  c.hop_ms = 15;
  EXPECT_THROW(c.validate(), ValidationError);
  FeatureConfig d;
  d.fmax = 30000;
  EXPECT_THROW(d.validate(), ValidationError);
  EXPECT_NE(FeatureConfig{}.fingerprint(), d.fingerprint());
}

TEST(MelScaleTest, SlaneyBreakpointAndInverse) {
  EXPECT_DOUBLE_EQ(hz_to_mel(1000.0), 15.0);
  EXPECT_NEAR(hz_to_mel(500.0), 7.5, 1e-12);
  for (double hz : {0.0, 123.0, 999.0, 1000.0, 4321.0, 22050.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-9);
}

TEST(ExtractTest, SilenceIsConstantFloor) {
  FeatureConfig c;
  const auto m = extract_logmel(Waveform{std::vector<float>(441000, 0.0f), 44100}, c);
  ASSERT_EQ(m.rows, 500);
  ASSERT_EQ(m.cols, 64);
  for (float v : m.values) EXPECT_FLOAT_EQ(v, static_cast<float>(std::log(1e-10)));
}

TEST(ExtractTest, TenSecondsGiveFiveHundredRowsForAnyLength) {
  FeatureConfig c;
  c.n_mels = 16;
  for (double sec : {0.1, 9.97, 10.0, 10.3}) {
    const auto m = extract_logmel(sine(440, sec, 44100), c);
    EXPECT_EQ(m.rows, 500);
    EXPECT_EQ(m.cols, 16);
    for (float v : m.values) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, static_cast<float>(std::log(1e-10)) - 1e-4f);
    }
  }
}

TEST(ExtractTest, SineMatchesDirectDft) {
  FeatureConfig c;
  const auto w = sine(1000.0, 1.0, c.sample_rate);
  MelExtractor ex(c);
  const auto m = ex.extract(w);
  NaiveLogMel oracle(c);
  const int band = oracle.band_containing(1000.0);
  for (int t : {5, 20, 40}) {
    const auto ref = oracle.frame(w.samples, t);
    for (int b = 0; b < c.n_mels; ++b) EXPECT_NEAR(m.at(t, b), ref[b], 2e-4) << "frame " << t << " band " << b;
    EXPECT_EQ(std::max_element(ref.begin(), ref.end()) - ref.begin(), band);
  }
  // Full-window frames all peak in the same band.
  for (int t = 1; t < 49; ++t) {
    const auto row = m.row(t);
    EXPECT_EQ(std::max_element(row.begin(), row.end()) - row.begin(), band) << "frame " << t;
  }
}

TEST(ExtractTest, ScalingShiftsByLnTen) {
  FeatureConfig c;
  c.n_mels = 32;
  std::mt19937 rng(1);
  std::normal_distribution<float> g(0, 0.01f);
  Waveform w{std::vector<float>(44100), 44100};
  for (auto& s : w.samples) s = g(rng);
  Waveform loud = w;
  for (auto& s : loud.samples) s *= 10;
  const auto a = extract_logmel(w, c), b = extract_logmel(loud, c);
  for (int t = 0; t < 50; ++t)
    for (int m = 0; m < c.n_mels; ++m) EXPECT_NEAR(b.at(t, m) - a.at(t, m), std::log(10.0), 1e-3);
}

TEST(ExtractTest, RejectsBadInput) {
  FeatureConfig c;
  EXPECT_THROW(extract_logmel(Waveform{{}, 44100}, c), Error);
  EXPECT_THROW(extract_logmel(Waveform{{0.0f, NAN}, 44100}, c), Error);
  EXPECT_THROW(extract_logmel(Waveform{{0.0f}, 16000}, c), ValidationError);
}

TEST(PadOrTrimTest, SpecExamples) {
  const float floor = static_cast<float>(std::log(1e-10));
  for (int rows : {500, 503, 498}) {
    FeatureMatrix in(rows, 64);
    for (int r = 0; r < rows; ++r) in.at(r, 0) = static_cast<float>(r);
    const auto out = pad_or_trim(in, 500, floor);
    ASSERT_EQ(out.rows, 500);
    for (int r = 0; r < 500; ++r) {
      if (r < rows) EXPECT_EQ(out.at(r, 0), static_cast<float>(r));
      else EXPECT_EQ(out.at(r, 0), floor);
    }
  }
  EXPECT_THROW(pad_or_trim(FeatureMatrix(0, 4), 10, 0), Error);
}

TEST(MatrixContainerTest, RoundTripAndCorruption) {
  FeatureMatrix m(3, 2);
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = 0.25f * i - 1;
  const auto bytes = encode_matrix(m);
  ASSERT_EQ(bytes.size(), 16u + 6 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "SGFM");
  const auto back = decode_matrix(bytes, "x");
  EXPECT_EQ(back.values, m.values);
  EXPECT_EQ(back.clip_id, "x");
  EXPECT_THROW(decode_matrix(bytes.substr(0, bytes.size() - 1)), ParseError);
  EXPECT_THROW(decode_matrix("XXXX" + bytes.substr(4)), ParseError);
  testing::TempDir dir("matrix");
  write_matrix((dir / "m.sgfm").string(), m);
  EXPECT_EQ(read_matrix((dir / "m.sgfm").string()).values, m.values);
}

}  // namespace
}  // namespace sedgl
