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

// Inference, ensembling and median-filter decoding of frame probabilities
// into timed events.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "sedgl/corpus.hpp"
#include "sedgl/features.hpp"
#include "sedgl/model.hpp"

namespace sedgl {

/// Clip and frame probabilities for one clip, with frame_probs upsampled to
/// `target_frames` rows by nearest-neighbour repetition. Attention and
/// pooled vectors are dropped.
inline ProbabilitySet upsample_frames(ProbabilitySet p, int target_frames) {
  p.attention.clear();
  p.contextual.clear();
  if (p.frames == target_frames) return p;
  std::vector<double> up(static_cast<std::size_t>(target_frames) * p.classes);
  for (int t = 0; t < target_frames; ++t) {
    const int src = static_cast<int>(static_cast<long long>(t) * p.frames / target_frames);
    for (int c = 0; c < p.classes; ++c)
      up[static_cast<std::size_t>(t) * p.classes + c] = p.frame(src, c);
  }
  p.frame_probs = std::move(up);
  p.frames = target_frames;
  return p;
}

/// Inference-mode probabilities for a set of clips, processed in chunks.
inline std::vector<ProbabilitySet> predict(Model& model, const std::vector<const FeatureMatrix*>& clips,
                                           int chunk = 16) {
  std::vector<ProbabilitySet> out;
  out.reserve(clips.size());
  const int target = model.config().encoder.input_frames;
  for (std::size_t i = 0; i < clips.size(); i += chunk) {
    const std::vector<const FeatureMatrix*> part(
        clips.begin() + static_cast<long>(i),
        clips.begin() + static_cast<long>(std::min(clips.size(), i + chunk)));
    for (auto& p : model.forward(part, false)) out.push_back(upsample_frames(std::move(p), target));
  }
  return out;
}

inline ProbabilitySet predict(Model& model, const FeatureMatrix& clip) {
  return predict(model, std::vector<const FeatureMatrix*>{&clip}).front();
}

/// Arithmetic mean of clip and frame probabilities across models, taken as
/// first + mean(member - first) so identical members reproduce it exactly.
inline ProbabilitySet ensemble(const std::vector<ProbabilitySet>& sets) {
  if (sets.empty()) throw Error("nothing to ensemble");
  ProbabilitySet out = sets.front();
  out.attention.clear();
  out.contextual.clear();
  std::vector<double> dclip(out.clip_probs.size(), 0.0), dframe(out.frame_probs.size(), 0.0);
  for (std::size_t k = 1; k < sets.size(); ++k) {
    const auto& s = sets[k];
    if (s.frames != out.frames || s.classes != out.classes ||
        s.frame_probs.size() != out.frame_probs.size() || s.clip_probs.size() != out.clip_probs.size())
      throw ValidationError("ensemble members have different shapes");
    if (s.clip_id != out.clip_id) throw ValidationError("ensemble members describe different clips");
    for (std::size_t i = 0; i < dclip.size(); ++i) dclip[i] += s.clip_probs[i] - out.clip_probs[i];
    for (std::size_t i = 0; i < dframe.size(); ++i) dframe[i] += s.frame_probs[i] - out.frame_probs[i];
  }
  const double n = static_cast<double>(sets.size());
  for (std::size_t i = 0; i < dclip.size(); ++i) out.clip_probs[i] += dclip[i] / n;
  for (std::size_t i = 0; i < dframe.size(); ++i) out.frame_probs[i] += dframe[i] / n;
  return out;
}

struct WindowPlan {
  std::vector<int> window_frames;
  double beta = 1.0 / 3.0;
  double hop_ms = 20.0;
};

inline constexpr int kFixedWindowFrames = 27;

/// window_c = round_half_up(duration_c / hop * beta), at least 1.
inline WindowPlan adaptive_windows(std::span<const double> avg_durations_s, double beta,
                                   double hop_ms = 20.0) {
  if (!(beta > 0)) throw ValidationError("beta must be positive");
  if (!(hop_ms > 0)) throw ValidationError("hop must be positive");
  WindowPlan plan{{}, beta, hop_ms};
  for (double d : avg_durations_s) {
    if (!(d > 0)) throw ValidationError("average durations must be positive");
    const double frames = d * 1000.0 / hop_ms;
    plan.window_frames.push_back(std::max(1, static_cast<int>(std::floor(frames * beta + 0.5))));
  }
  return plan;
}

inline WindowPlan fixed_windows(int classes, int window = kFixedWindowFrames, double hop_ms = 20.0) {
  if (window < 1) throw ValidationError("window must be positive");
  return WindowPlan{std::vector<int>(classes, window), 0.0, hop_ms};
}

/// Sliding median over [i - (w-1)/2, i + w/2]. Near the ends both sides are
/// shrunk by the same amount until the window fits; an even-sized window
/// takes the lower median.
inline std::vector<double> median_smooth(std::span<const double> seq, int window) {
  if (window < 1) throw Error("median window must be positive");
  const int n = static_cast<int>(seq.size());
  if (window == 1) return {seq.begin(), seq.end()};
  const int left = (window - 1) / 2, right = window / 2;
  std::vector<double> out(n), buf;
  buf.reserve(window);
  for (int i = 0; i < n; ++i) {
    const int shrink = std::max({0, left - i, i + right - (n - 1)});
    const int lo = i - std::max(0, left - shrink), hi = i + std::max(0, right - shrink);
    buf.assign(seq.begin() + lo, seq.begin() + hi + 1);
    const auto mid = buf.begin() + (static_cast<long>(buf.size()) - 1) / 2;
    std::nth_element(buf.begin(), mid, buf.end());
    out[i] = *mid;
  }
  return out;
}

/// Maximal runs of non-zero entries as [start, end] frame index pairs.
inline std::vector<std::pair<int, int>> active_runs(std::span<const double> seq) {
  std::vector<std::pair<int, int>> runs;
  int start = -1;
  for (int i = 0; i < static_cast<int>(seq.size()); ++i) {
    if (seq[i] != 0 && start < 0) start = i;
    if (seq[i] == 0 && start >= 0) {
      runs.emplace_back(start, i - 1);
      start = -1;
    }
  }
  if (start >= 0) runs.emplace_back(start, static_cast<int>(seq.size()) - 1);
  return runs;
}

/// Smoothed, gated and re-smoothed binary activity of class c.
inline std::vector<double> class_activity(const ProbabilitySet& p, int c, int window, double alpha) {
  std::vector<double> col(p.frames);
  for (int t = 0; t < p.frames; ++t) col[t] = p.frame(t, c);
  const int gate = p.clip_probs[c] >= alpha ? 1 : 0;
  auto smooth = median_smooth(col, window);
  for (auto& v : smooth) v = v * gate >= alpha ? 1.0 : 0.0;
  return median_smooth(smooth, window);
}

/// Events for one clip. Classes whose clip probability is below alpha emit
/// nothing.
inline std::vector<DetectionEvent> decode_events(const ProbabilitySet& p, const WindowPlan& plan,
                                                 const EventVocabulary& vocab, double alpha = 0.5) {
  if (static_cast<int>(plan.window_frames.size()) != p.classes || vocab.size() != p.classes)
    throw ValidationError("window plan / vocabulary / probability class count mismatch");
  std::vector<DetectionEvent> events;
  const double hop = plan.hop_ms / 1000.0;
  for (int c = 0; c < p.classes; ++c) {
    if (p.clip_probs[c] < alpha) continue;
    const auto act = class_activity(p, c, plan.window_frames[c], alpha);
    for (auto [s, e] : active_runs(act)) events.push_back({vocab.name(c), s * hop, (e + 1) * hop});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const DetectionEvent& a, const DetectionEvent& b) { return a.onset < b.onset; });
  return events;
}

/// Submission format: "filename<TAB>onset<TAB>offset<TAB>event_label" with
/// three decimals. Clips without events are omitted.
inline std::string format_submission(const std::vector<StrongAnnotation>& clips) {
  std::string s = "filename\tonset\toffset\tevent_label\n";
  char buf[64];
  for (const auto& a : clips)
    for (const auto& e : a.events) {
      std::snprintf(buf, sizeof buf, "\t%.3f\t%.3f\t", e.onset, e.offset);
      s += a.clip_id + buf + e.label + '\n';
    }
  return s;
}

/// Probability dump in the feature container: row 0 holds clip
/// probabilities, rows 1..frames the frame probabilities.
inline FeatureMatrix to_dump(const ProbabilitySet& p) {
  FeatureMatrix m(p.frames + 1, p.classes);
  m.clip_id = p.clip_id;
  for (int c = 0; c < p.classes; ++c) m.at(0, c) = static_cast<float>(p.clip_probs[c]);
  for (int t = 0; t < p.frames; ++t)
    for (int c = 0; c < p.classes; ++c) m.at(t + 1, c) = static_cast<float>(p.frame(t, c));
  return m;
}

inline ProbabilitySet from_dump(const FeatureMatrix& m) {
  if (m.rows < 2) throw ParseError("probability dump needs at least two rows");
  ProbabilitySet p;
  p.clip_id = m.clip_id;
  p.frames = m.rows - 1;
  p.classes = m.cols;
  for (int c = 0; c < m.cols; ++c) p.clip_probs.push_back(m.at(0, c));
  for (int t = 1; t < m.rows; ++t)
    for (int c = 0; c < m.cols; ++c) p.frame_probs.push_back(m.at(t, c));
  return p;
}

}  // namespace sedgl
