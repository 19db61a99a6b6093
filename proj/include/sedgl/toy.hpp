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

// Two-class synthetic corpus (tone bursts and noise bursts over a quiet
// background) for smoke tests and small-scale experiments.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sedgl/audio.hpp"
#include "sedgl/corpus.hpp"

namespace sedgl::toy {

inline EventVocabulary vocabulary() { return EventVocabulary({"Noise", "Tone"}); }

enum class Domain {
  kRecorded,   // hum + hiss background, wider level range
  kSynthetic,  // clean background, narrower tone range
};

struct ClipSpec {
  int sample_rate = 44100;
  double duration_s = 10.0;
  int min_events = 1;
  int max_events = 2;
  double min_event_s = 0.8;
  double max_event_s = 3.0;
  /// Unlabeled frequency sweeps mixed into recorded-domain clips.
  int max_distractors = 2;
  double min_level = 0.03;  // event amplitude floor (recorded domain)
  double max_hiss = 0.02;   // background hiss ceiling (recorded domain)
  Domain domain = Domain::kRecorded;
};

struct Clip {
  Waveform audio;
  StrongAnnotation labels;
};

namespace detail {

/// Band-pass biquad (constant peak gain) applied in place.
inline void bandpass(std::vector<double>& x, double center_hz, double q, double sr) {
  const double w0 = 2 * std::numbers::pi * center_hz / sr;
  const double alpha = std::sin(w0) / (2 * q);
  const double a0 = 1 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2 * std::cos(w0) / a0, a2 = (1 - alpha) / a0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (auto& v : x) {
    const double y = b0 * v + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = v;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

inline double ramp(int i, int s0, int s1, int fade) {
  return std::min({1.0, (i - s0) / static_cast<double>(fade), (s1 - i) / static_cast<double>(fade)});
}

}  // namespace detail

/// Renders one clip. Labeled events never overlap each other; distractor
/// sweeps may overlap anything.
inline Clip make_clip(const std::string& clip_id, const ClipSpec& spec, std::mt19937_64& rng) {
  const auto vocab = vocabulary();
  const int n = static_cast<int>(std::lround(spec.duration_s * spec.sample_rate));
  const double sr = spec.sample_rate;
  Clip clip;
  clip.audio.sample_rate = spec.sample_rate;
  clip.labels.clip_id = clip_id;
  std::vector<double> x(n, 0.0);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const bool recorded = spec.domain == Domain::kRecorded;
  // Keeps every frequency below Nyquist at low sample rates.
  const double fmax = 0.45 * sr;

  // Background: pink-ish hiss plus mains hum in recorded clips.
  const double hiss = recorded ? uniform(std::min(0.004, spec.max_hiss), spec.max_hiss) : 0.002;
  const double hum = recorded ? uniform(0.0, 0.03) : 0.0;
  const double hum_hz = uniform(50, 150);
  double lp = 0;
  for (int i = 0; i < n; ++i) {
    lp = 0.9 * lp + 0.1 * gauss(rng);
    x[i] = hiss * (0.5 * gauss(rng) + 2.0 * lp) + hum * std::sin(2 * std::numbers::pi * hum_hz * i / sr);
  }

  std::uniform_int_distribution<int> count(spec.min_events, spec.max_events);
  const int wanted = count(rng);
  std::vector<DetectionEvent> placed;
  for (int attempt = 0; attempt < 200 && static_cast<int>(placed.size()) < wanted; ++attempt) {
    const double len = uniform(spec.min_event_s, spec.max_event_s);
    const double on = std::round((spec.duration_s - len) * unit(rng) * 100) / 100;
    const double off = std::round((on + len) * 100) / 100;
    bool clash = false;
    for (const auto& e : placed)
      if (on < e.offset + 0.3 && off > e.onset - 0.3) clash = true;
    if (clash) continue;
    const int c = static_cast<int>(unit(rng) * 2);
    placed.push_back({vocab.name(c), on, off});
  }
  std::sort(placed.begin(), placed.end(),
            [](const DetectionEvent& a, const DetectionEvent& b) { return a.onset < b.onset; });

  const int fade = static_cast<int>(0.01 * sr);
  for (const auto& e : placed) {
    const int s0 = static_cast<int>(std::lround(e.onset * sr));
    const int s1 = std::min(n, static_cast<int>(std::lround(e.offset * sr)));
    const double level = recorded ? uniform(spec.min_level, 0.2) : uniform(0.12, 0.2);
    if (e.label == "Tone") {
      const double f = std::min(fmax, recorded ? uniform(400, 4000) : uniform(800, 2000));
      for (int i = s0; i < s1; ++i)
        x[i] += level * detail::ramp(i, s0, s1, fade) * std::sin(2 * std::numbers::pi * f * (i - s0) / sr);
    } else {
      std::vector<double> burst(s1 - s0);
      for (auto& v : burst) v = gauss(rng);
      const double center = std::min(fmax, recorded ? uniform(1000, 8000) : uniform(3000, 5000));
      detail::bandpass(burst, center, uniform(0.7, 1.5), sr);
      for (int i = s0; i < s1; ++i) x[i] += 1.5 * level * detail::ramp(i, s0, s1, fade) * burst[i - s0];
    }
  }

  if (recorded && spec.max_distractors > 0) {
    std::uniform_int_distribution<int> nd(0, spec.max_distractors);
    const int k = nd(rng);
    for (int d = 0; d < k; ++d) {
      const double len = uniform(0.3, 1.5);
      const double on = uniform(0, spec.duration_s - len);
      const int s0 = static_cast<int>(on * sr), s1 = std::min(n, static_cast<int>((on + len) * sr));
      const double f0 = std::min(fmax, uniform(300, 3000)), f1 = std::min(fmax, uniform(300, 6000)), level = uniform(0.03, 0.15);
      double phase = 0;
      for (int i = s0; i < s1; ++i) {
        const double frac = (i - s0) / static_cast<double>(s1 - s0);
        phase += 2 * std::numbers::pi * (f0 + (f1 - f0) * frac) / sr;
        x[i] += level * detail::ramp(i, s0, s1, fade) * std::sin(phase);
      }
    }
  }

  clip.audio.samples.resize(n);
  for (int i = 0; i < n; ++i) clip.audio.samples[i] = static_cast<float>(std::clamp(x[i], -1.0, 1.0));
  clip.labels.events = std::move(placed);
  return clip;
}

}  // namespace sedgl::toy
