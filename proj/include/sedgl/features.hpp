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

// Log-mel front end and the on-disk feature container.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "sedgl/audio.hpp"
#include "sedgl/common.hpp"

namespace sedgl {

struct FeatureConfig {
  int sample_rate = 44100;
  int n_mels = 64;
  double frame_length_ms = 40.0;
  double hop_ms = 20.0;
  int fft_size = 2048;
  int target_frames = 500;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 selects Nyquist
  double log_floor = 1e-10;

  int window_samples() const {
    return static_cast<int>(std::lround(sample_rate * frame_length_ms / 1000.0));
  }
  int hop_samples() const {
    return static_cast<int>(std::lround(sample_rate * hop_ms / 1000.0));
  }
  double upper_hz() const { return fmax > 0 ? fmax : sample_rate / 2.0; }
  float floor_value() const { return static_cast<float>(std::log(log_floor)); }

  void validate() const {
    if (sample_rate <= 0 || n_mels <= 0 || fft_size <= 0 || target_frames <= 0)
      throw ValidationError("feature sizes must be positive");
    if (!(hop_ms > 0) || std::abs(frame_length_ms - 2 * hop_ms) > 1e-9)
      throw ValidationError("hop must be half the frame length");
    if (window_samples() > fft_size)
      throw ValidationError("analysis window longer than the FFT");
    if (!(log_floor > 0)) throw ValidationError("log floor must be positive");
    if (fmin < 0 || upper_hz() <= fmin || upper_hz() > sample_rate / 2.0 + 1e-9)
      throw ValidationError("invalid mel frequency range");
  }

  std::uint64_t fingerprint() const {
    std::string s = "feat:" + std::to_string(sample_rate) + ":" +
                    std::to_string(n_mels) + ":" + std::to_string(frame_length_ms) +
                    ":" + std::to_string(hop_ms) + ":" + std::to_string(fft_size) +
                    ":" + std::to_string(target_frames) + ":" + std::to_string(fmin) +
                    ":" + std::to_string(upper_hz()) + ":" + std::to_string(log_floor);
    return detail::fnv1a(s);
  }
};

/// Row-major time x mel grid.
struct FeatureMatrix {
  std::string clip_id;
  int rows = 0;
  int cols = 0;
  std::vector<float> values;

  FeatureMatrix() = default;
  FeatureMatrix(int r, int c, float fill = 0.0f)
      : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

  float& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  float at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  std::span<const float> row(int r) const {
    return {values.data() + static_cast<std::size_t>(r) * cols,
            static_cast<std::size_t>(cols)};
  }
};

inline double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

inline double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

/// Slaney-style triangular filters with area normalization, n_mels x bins.
inline std::vector<std::vector<double>> mel_filterbank(const FeatureConfig& cfg) {
  const int bins = cfg.fft_size / 2 + 1;
  const double lo = hz_to_mel(cfg.fmin), hi = hz_to_mel(cfg.upper_hz());
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * i / (cfg.n_mels + 1));
  std::vector<std::vector<double>> fb(cfg.n_mels, std::vector<double>(bins, 0.0));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double l = edges[m], c = edges[m + 1], r = edges[m + 2];
    const double norm = 2.0 / (r - l);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.fft_size;
      const double up = (f - l) / (c - l);
      const double down = (r - f) / (r - c);
      fb[m][k] = std::max(0.0, std::min(up, down)) * norm;
    }
  }
  return fb;
}

/// Periodic Hann window.
inline std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / n);
  return w;
}

/// Truncates or pads the tail with `fill` so the result has `target` rows.
inline FeatureMatrix pad_or_trim(const FeatureMatrix& in, int target, float fill) {
  if (in.rows < 1) throw Error("pad_or_trim needs at least one frame");
  FeatureMatrix out(target, in.cols, fill);
  out.clip_id = in.clip_id;
  const int keep = std::min(in.rows, target);
  std::copy_n(in.values.begin(), static_cast<std::size_t>(keep) * in.cols,
              out.values.begin());
  return out;
}

/// Magnitude mel spectrogram on centered frames, before the log.
/// Frame t covers the window centered at sample t * hop (zero outside).
class MelExtractor {
 public:
  explicit MelExtractor(FeatureConfig cfg)
      : cfg_(cfg), window_(hann_window(cfg.window_samples())), fb_(mel_filterbank(cfg)) {
    cfg_.validate();
    fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    for (const auto& f : fb_) {
      std::size_t lo = 0, hi = f.size();
      while (lo < hi && f[lo] == 0) ++lo;
      while (hi > lo && f[hi - 1] == 0) --hi;
      support_.emplace_back(lo, hi);
    }
  }

  const FeatureConfig& config() const { return cfg_; }
  const std::vector<std::vector<double>>& filterbank() const { return fb_; }

  /// Magnitude spectrum (fft_size / 2 + 1 bins) of frame `t`.
  std::vector<double> frame_magnitude(std::span<const float> x, int t) {
    const int win = cfg_.window_samples();
    const long long start = static_cast<long long>(t) * cfg_.hop_samples() - win / 2;
    std::vector<double> buf(cfg_.fft_size, 0.0);
    for (int i = 0; i < win; ++i) {
      const long long k = start + i;
      if (k >= 0 && k < static_cast<long long>(x.size())) buf[i] = x[k] * window_[i];
    }
    std::vector<std::complex<double>> spec;
    fft_.fwd(spec, buf);
    std::vector<double> mag(cfg_.fft_size / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(spec[k]);
    return mag;
  }

  FeatureMatrix extract(const Waveform& w) {
    if (w.samples.empty()) throw Error("empty waveform");
    if (w.sample_rate != cfg_.sample_rate)
      throw ValidationError("sample rate mismatch; resample first");
    for (float s : w.samples)
      if (!std::isfinite(s)) throw Error("non-finite audio sample");
    const int frames = 1 + static_cast<int>(w.samples.size() / cfg_.hop_samples());
    FeatureMatrix raw(frames, cfg_.n_mels);
    const double floor = cfg_.log_floor;
    for (int t = 0; t < frames; ++t) {
      const auto mag = frame_magnitude(w.samples, t);
      for (int m = 0; m < cfg_.n_mels; ++m) {
        const auto& f = fb_[m];
        double acc = 0;
        for (std::size_t k = support_[m].first; k < support_[m].second; ++k) acc += f[k] * mag[k];
        raw.at(t, m) = static_cast<float>(std::log(std::max(acc, floor)));
      }
    }
    return pad_or_trim(raw, cfg_.target_frames, cfg_.floor_value());
  }

 private:
  FeatureConfig cfg_;
  std::vector<double> window_;
  std::vector<std::vector<double>> fb_;
  std::vector<std::pair<std::size_t, std::size_t>> support_;  // non-zero bins per filter
  Eigen::FFT<double> fft_;
};

inline FeatureMatrix extract_logmel(const Waveform& w, const FeatureConfig& cfg) {
  return MelExtractor(cfg).extract(w);
}

// Binary container: "SGFM", u32 version, u32 rows, u32 cols, then
// rows * cols little-endian float32 values in row-major order.
inline constexpr char kMatrixMagic[4] = {'S', 'G', 'F', 'M'};
inline constexpr std::uint32_t kMatrixVersion = 1;

inline std::string encode_matrix(const FeatureMatrix& m) {
  std::string out(kMatrixMagic, 4);
  detail::append_raw<std::uint32_t>(out, kMatrixVersion);
  detail::append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows));
  detail::append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols));
  out.append(reinterpret_cast<const char*>(m.values.data()), m.values.size() * sizeof(float));
  return out;
}

inline FeatureMatrix decode_matrix(const std::string& bytes, std::string clip_id = {}) {
  if (bytes.size() < 16 || bytes.compare(0, 4, std::string(kMatrixMagic, 4)) != 0)
    throw ParseError("not a feature container");
  if (detail::read_u32(bytes, 4) != kMatrixVersion)
    throw ParseError("unsupported feature container version");
  const auto rows = detail::read_u32(bytes, 8), cols = detail::read_u32(bytes, 12);
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != 16 + n * sizeof(float)) throw ParseError("feature container size mismatch");
  FeatureMatrix m(static_cast<int>(rows), static_cast<int>(cols));
  m.clip_id = std::move(clip_id);
  std::memcpy(m.values.data(), bytes.data() + 16, n * sizeof(float));
  return m;
}

inline void write_matrix(const std::string& path, const FeatureMatrix& m) {
  detail::write_file(path, encode_matrix(m));
}

inline FeatureMatrix read_matrix(const std::string& path, std::string clip_id = {}) {
  return decode_matrix(detail::read_file(path), std::move(clip_id));
}

}  // namespace sedgl
