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

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sedgl/common.hpp"

namespace sedgl {

/// Mono waveform in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 44100;
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline std::uint32_t read_u32(const std::string& b, std::size_t at) {
  std::uint32_t v;
  std::memcpy(&v, b.data() + at, 4);
  return v;
}
inline std::uint16_t read_u16(const std::string& b, std::size_t at) {
  std::uint16_t v;
  std::memcpy(&v, b.data() + at, 2);
  return v;
}
template <typename T>
void append_raw(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace detail

/// Decodes a RIFF/WAVE byte string: PCM 8/16/24/32-bit or IEEE float 32/64.
/// Multi-channel input is averaged down to mono.
inline Waveform decode_wav(const std::string& bytes) {
  using detail::read_u16;
  using detail::read_u32;
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0)
    throw ParseError("not a RIFF/WAVE file");
  std::size_t pos = 12;
  int format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size() && id != "data")
      throw ParseError("truncated chunk " + id);
    if (id == "fmt ") {
      if (size < 16) throw ParseError("short fmt chunk");
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      bits = read_u16(bytes, body + 14);
      if (format == 0xFFFE && size >= 26) format = read_u16(bytes, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ParseError("data chunk before fmt chunk");
      if (channels < 1 || rate == 0) throw ParseError("bad fmt chunk");
      const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
      const int width = bits / 8;
      if (width < 1) throw ParseError("bad sample width");
      const std::size_t frames = avail / (static_cast<std::size_t>(width) * channels);
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.assign(frames, 0.0f);
      const char* p = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0;
        for (int ch = 0; ch < channels; ++ch, p += width) {
          double v = 0;
          if (format == 1) {
            switch (bits) {
              case 8: v = (static_cast<unsigned char>(*p) - 128) / 128.0; break;
              case 16: {
                std::int16_t s; std::memcpy(&s, p, 2); v = s / 32768.0; break;
              }
              case 24: {
                std::int32_t s = (static_cast<unsigned char>(p[0])) |
                                 (static_cast<unsigned char>(p[1]) << 8) |
                                 (static_cast<signed char>(p[2]) * 65536);
                v = s / 8388608.0;
                break;
              }
              case 32: {
                std::int32_t s; std::memcpy(&s, p, 4); v = s / 2147483648.0; break;
              }
              default: throw ParseError("unsupported PCM width");
            }
          } else if (format == 3) {
            if (bits == 32) { float f; std::memcpy(&f, p, 4); v = f; }
            else if (bits == 64) { double f; std::memcpy(&f, p, 8); v = f; }
            else throw ParseError("unsupported float width");
          } else {
            throw ParseError("unsupported WAVE format tag");
          }
          acc += v;
        }
        w.samples[i] = static_cast<float>(acc / channels);
      }
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw ParseError("no data chunk");
}

inline Waveform read_wav(const std::string& path) {
  return decode_wav(detail::read_file(path));
}

/// 16-bit PCM mono encoding; samples are clipped to [-1, 1].
inline std::string encode_wav(const Waveform& w) {
  using detail::append_raw;
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  std::string out = "RIFF";
  append_raw<std::uint32_t>(out, 36 + 2 * n);
  out += "WAVEfmt ";
  append_raw<std::uint32_t>(out, 16);
  append_raw<std::uint16_t>(out, 1);
  append_raw<std::uint16_t>(out, 1);
  append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate));
  append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  append_raw<std::uint16_t>(out, 2);
  append_raw<std::uint16_t>(out, 16);
  out += "data";
  append_raw<std::uint32_t>(out, 2 * n);
  for (float s : w.samples) {
    const double c = std::clamp(static_cast<double>(s), -1.0, 1.0);
    append_raw<std::int16_t>(out, static_cast<std::int16_t>(std::lround(c * 32767.0)));
  }
  return out;
}

inline void write_wav(const std::string& path, const Waveform& w) {
  detail::write_file(path, encode_wav(w));
}

/// Band-limited resampling with a Hann-windowed sinc kernel. The kernel is
/// renormalized per output sample, so constant signals are reproduced
/// exactly, including at the edges.
inline std::vector<float> resample(std::span<const float> input, int from_rate,
                                   int to_rate, int half_taps = 32) {
  if (from_rate <= 0 || to_rate <= 0) throw Error("sample rates must be positive");
  if (from_rate == to_rate || input.empty())
    return {input.begin(), input.end()};
  const double ratio = static_cast<double>(to_rate) / from_rate;
  const auto out_len = static_cast<std::size_t>(std::llround(input.size() * ratio));
  const double cutoff = std::min(1.0, ratio);
  const double support = half_taps / cutoff;  // in input samples
  std::vector<float> out(out_len);
  const auto n_in = static_cast<long long>(input.size());
  for (std::size_t n = 0; n < out_len; ++n) {
    const double t = n / ratio;
    const auto lo = std::max<long long>(0, static_cast<long long>(std::ceil(t - support)));
    const auto hi = std::min<long long>(n_in - 1, static_cast<long long>(std::floor(t + support)));
    double acc = 0, wsum = 0;
    for (long long k = lo; k <= hi; ++k) {
      const double x = (t - k) * cutoff;
      const double sinc = x == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * (t - k) / support);
      const double h = sinc * win;
      acc += h * input[k];
      wsum += h;
    }
    out[n] = static_cast<float>(wsum != 0 ? acc / wsum : 0.0);
  }
  return out;
}

}  // namespace sedgl
