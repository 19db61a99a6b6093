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

// Event-based, segment-based and clip-level (tagging) macro F1.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sedgl/corpus.hpp"

namespace sedgl {

struct CollarConfig {
  double onset_collar = 0.200;
  double offset_collar_abs = 0.200;
  double offset_collar_rel = 0.20;
  double segment_length = 1.0;
};

enum class MatchStrategy {
  kOptimal,  // maximum one-to-one matching, augmenting from onset order
  kGreedy,   // single pass in onset order, first admissible reference wins
};

struct ClassCounts {
  long long tp = 0, fp = 0, fn = 0;
};

struct ClassScore {
  ClassCounts counts;
  double precision = 0, recall = 0, f1 = 0;
};

struct ScoreReport {
  std::string variant;  // "event", "segment" or "clip"
  std::vector<std::string> classes;
  std::vector<ClassScore> per_class;
  double macro_f1 = 0;
};

inline ClassScore score(const ClassCounts& k) {
  ClassScore s{k};
  s.precision = k.tp + k.fp > 0 ? static_cast<double>(k.tp) / (k.tp + k.fp) : 0.0;
  s.recall = k.tp + k.fn > 0 ? static_cast<double>(k.tp) / (k.tp + k.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

inline ScoreReport make_report(std::string variant, const EventVocabulary& vocab,
                               const std::vector<ClassCounts>& counts) {
  ScoreReport r{std::move(variant), vocab.classes(), {}, 0.0};
  for (const auto& k : counts) {
    r.per_class.push_back(score(k));
    r.macro_f1 += r.per_class.back().f1;
  }
  r.macro_f1 /= static_cast<double>(counts.size());
  return r;
}

/// True when `pred` falls within the onset and offset collars of `ref`.
inline bool within_collars(const DetectionEvent& ref, const DetectionEvent& pred, const CollarConfig& cfg) {
  constexpr double kTol = 1e-9;
  const double off_collar =
      std::max(cfg.offset_collar_abs, cfg.offset_collar_rel * (ref.offset - ref.onset));
  return std::abs(pred.onset - ref.onset) <= cfg.onset_collar + kTol &&
         std::abs(pred.offset - ref.offset) <= off_collar + kTol;
}

namespace detail {

inline std::vector<DetectionEvent> by_onset(std::vector<DetectionEvent> v) {
  std::stable_sort(v.begin(), v.end(), [](const DetectionEvent& a, const DetectionEvent& b) {
    return a.onset < b.onset || (a.onset == b.onset && a.offset < b.offset);
  });
  return v;
}

/// Number of matched pairs between same-class refs and preds.
inline long long match_count(const std::vector<DetectionEvent>& refs,
                             const std::vector<DetectionEvent>& preds, const CollarConfig& cfg,
                             MatchStrategy strategy) {
  const auto r = by_onset(refs);
  const auto p = by_onset(preds);
  std::vector<std::vector<int>> adj(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j)
      if (within_collars(r[j], p[i], cfg)) adj[i].push_back(static_cast<int>(j));
  std::vector<int> owner(r.size(), -1);
  long long matched = 0;
  if (strategy == MatchStrategy::kGreedy) {
    for (std::size_t i = 0; i < p.size(); ++i)
      for (int j : adj[i])
        if (owner[j] < 0) {
          owner[j] = static_cast<int>(i);
          ++matched;
          break;
        }
    return matched;
  }
  std::vector<char> seen;
  std::function<bool(int)> augment = [&](int i) {
    for (int j : adj[i]) {
      if (seen[j]) continue;
      seen[j] = 1;
      if (owner[j] < 0 || augment(owner[j])) {
        owner[j] = i;
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < p.size(); ++i) {
    seen.assign(r.size(), 0);
    if (augment(static_cast<int>(i))) ++matched;
  }
  return matched;
}

inline void check_bounds(const std::vector<DetectionEvent>& events, double duration) {
  constexpr double kTol = 1e-6;
  for (const auto& e : events)
    if (e.onset < -kTol || e.offset > duration + kTol || !(e.offset > e.onset))
      throw ValidationError("event (" + e.label + ", " + std::to_string(e.onset) + ", " +
                            std::to_string(e.offset) + ") outside the clip");
}

}  // namespace detail

/// Per-class TP/FP/FN for one clip.
inline std::vector<ClassCounts> match_events(const std::vector<DetectionEvent>& refs,
                                             const std::vector<DetectionEvent>& preds,
                                             const EventVocabulary& vocab, const CollarConfig& cfg = {},
                                             double clip_duration = 10.0,
                                             MatchStrategy strategy = MatchStrategy::kOptimal) {
  detail::check_bounds(refs, clip_duration);
  detail::check_bounds(preds, clip_duration);
  std::vector<std::vector<DetectionEvent>> r(vocab.size()), p(vocab.size());
  for (const auto& e : refs) r[vocab.index_of(e.label)].push_back(e);
  for (const auto& e : preds) p[vocab.index_of(e.label)].push_back(e);
  std::vector<ClassCounts> out(vocab.size());
  for (int c = 0; c < vocab.size(); ++c) {
    const long long tp = detail::match_count(r[c], p[c], cfg, strategy);
    out[c] = {tp, static_cast<long long>(p[c].size()) - tp, static_cast<long long>(r[c].size()) - tp};
  }
  return out;
}

namespace detail {

/// Pairs annotations by clip id; clips missing on one side count as empty.
template <typename Fn>
void for_each_clip(const std::vector<StrongAnnotation>& refs, const std::vector<StrongAnnotation>& preds,
                   const std::map<std::string, double>& durations, double default_duration, Fn&& fn) {
  std::map<std::string, std::pair<const StrongAnnotation*, const StrongAnnotation*>> clips;
  for (const auto& a : refs) clips[a.clip_id].first = &a;
  for (const auto& a : preds) clips[a.clip_id].second = &a;
  static const std::vector<DetectionEvent> kEmpty;
  for (const auto& [id, pair] : clips) {
    auto it = durations.find(id);
    const double dur = it == durations.end() ? default_duration : it->second;
    fn(pair.first ? pair.first->events : kEmpty, pair.second ? pair.second->events : kEmpty, dur);
  }
}

}  // namespace detail

/// Counts are pooled over all clips per class before computing P/R/F1.
inline ScoreReport event_based_f1(const std::vector<StrongAnnotation>& refs,
                                  const std::vector<StrongAnnotation>& preds, const EventVocabulary& vocab,
                                  const CollarConfig& cfg = {},
                                  const std::map<std::string, double>& durations = {},
                                  double default_duration = 10.0,
                                  MatchStrategy strategy = MatchStrategy::kOptimal) {
  std::vector<ClassCounts> total(vocab.size());
  detail::for_each_clip(refs, preds, durations, default_duration,
                        [&](const auto& r, const auto& p, double dur) {
                          const auto k = match_events(r, p, vocab, cfg, dur, strategy);
                          for (int c = 0; c < vocab.size(); ++c) {
                            total[c].tp += k[c].tp;
                            total[c].fp += k[c].fp;
                            total[c].fn += k[c].fn;
                          }
                        });
  return make_report("event", vocab, total);
}

/// Fixed-length segments; a (segment, class) cell is active when any event
/// of that class overlaps the half-open segment.
inline ScoreReport segment_based_f1(const std::vector<StrongAnnotation>& refs,
                                    const std::vector<StrongAnnotation>& preds, const EventVocabulary& vocab,
                                    double segment_length = 1.0,
                                    const std::map<std::string, double>& durations = {},
                                    double default_duration = 10.0) {
  if (!(segment_length > 0)) throw ValidationError("segment length must be positive");
  std::vector<ClassCounts> total(vocab.size());
  detail::for_each_clip(
      refs, preds, durations, default_duration, [&](const auto& r, const auto& p, double dur) {
        detail::check_bounds(r, dur);
        detail::check_bounds(p, dur);
        const int segs = static_cast<int>(std::ceil(dur / segment_length - 1e-9));
        auto activity = [&](const std::vector<DetectionEvent>& ev) {
          std::vector<std::vector<char>> a(vocab.size(), std::vector<char>(segs, 0));
          for (const auto& e : ev) {
            const int c = vocab.index_of(e.label);
            for (int s = 0; s < segs; ++s)
              if (e.onset < (s + 1) * segment_length && e.offset > s * segment_length) a[c][s] = 1;
          }
          return a;
        };
        const auto ra = activity(r), pa = activity(p);
        for (int c = 0; c < vocab.size(); ++c)
          for (int s = 0; s < segs; ++s) {
            if (ra[c][s] && pa[c][s]) ++total[c].tp;
            else if (pa[c][s]) ++total[c].fp;
            else if (ra[c][s]) ++total[c].fn;
          }
      });
  return make_report("segment", vocab, total);
}

/// Tagging F1 over binary per-clip class vectors.
inline ScoreReport clip_f1(const std::vector<std::vector<int>>& ref_tags,
                           const std::vector<std::vector<int>>& pred_tags, const EventVocabulary& vocab) {
  if (ref_tags.size() != pred_tags.size()) throw ValidationError("tag list sizes differ");
  std::vector<ClassCounts> total(vocab.size());
  for (std::size_t i = 0; i < ref_tags.size(); ++i) {
    if (static_cast<int>(ref_tags[i].size()) != vocab.size() ||
        static_cast<int>(pred_tags[i].size()) != vocab.size())
      throw ValidationError("tag vector size differs from the vocabulary");
    for (int c = 0; c < vocab.size(); ++c) {
      const bool r = ref_tags[i][c] != 0, p = pred_tags[i][c] != 0;
      if (r && p) ++total[c].tp;
      else if (p) ++total[c].fp;
      else if (r) ++total[c].fn;
    }
  }
  return make_report("clip", vocab, total);
}

inline std::string format_report_tsv(const ScoreReport& r) {
  std::string s = "event_label\ttp\tfp\tfn\tprecision\trecall\tf1\n";
  char buf[160];
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& k = r.per_class[c];
    std::snprintf(buf, sizeof buf, "\t%lld\t%lld\t%lld\t%.6f\t%.6f\t%.6f\n", k.counts.tp, k.counts.fp,
                  k.counts.fn, k.precision, k.recall, k.f1);
    s += r.classes[c] + buf;
  }
  std::snprintf(buf, sizeof buf, "macro\t\t\t\t\t\t%.6f\n", r.macro_f1);
  s += buf;
  return s;
}

/// Plain-text summary with one line per class.
inline std::string format_report_summary(const ScoreReport& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%s-based macro F1: %.2f%%\n", r.variant.c_str(), 100 * r.macro_f1);
  std::string s = buf;
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& k = r.per_class[c];
    std::snprintf(buf, sizeof buf, "  %-28s F1 %6.2f%%  P %6.2f%%  R %6.2f%%\n", r.classes[c].c_str(),
                  100 * k.f1, 100 * k.precision, 100 * k.recall);
    s += buf;
  }
  return s;
}

}  // namespace sedgl
