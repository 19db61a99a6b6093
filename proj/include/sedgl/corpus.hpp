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

// Dataset manifests, weak/strong label files and the label statistics used
// to size the per-class feature subspaces.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sedgl/common.hpp"

namespace sedgl {

/// Ordered list of event classes. Class order is alphabetical so that
/// indices are stable across runs regardless of how the list was supplied.
class EventVocabulary {
 public:
  EventVocabulary() = default;
  explicit EventVocabulary(std::vector<std::string> classes)
      : classes_(std::move(classes)) {
    std::sort(classes_.begin(), classes_.end());
    classes_.erase(std::unique(classes_.begin(), classes_.end()),
                   classes_.end());
    if (classes_.empty()) throw ValidationError("empty event vocabulary");
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      if (classes_[i].empty()) throw ValidationError("empty class name");
      index_.emplace(classes_[i], static_cast<int>(i));
    }
  }

  /// The ten domestic sound event classes of the DCASE 2019 task 4 data.
  static EventVocabulary dcase2019() {
    return EventVocabulary({"Alarm_bell_ringing", "Blender", "Cat", "Dishes",
                            "Dog", "Electric_shaver_toothbrush", "Frying",
                            "Running_water", "Speech", "Vacuum_cleaner"});
  }

  int size() const { return static_cast<int>(classes_.size()); }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::string& name(int c) const { return classes_.at(c); }

  std::optional<int> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int index_of(std::string_view name) const {
    auto c = find(name);
    if (!c) throw ValidationError("unknown class: " + std::string(name));
    return *c;
  }

  std::uint64_t fingerprint() const {
    std::uint64_t h = detail::fnv1a("vocab");
    for (const auto& c : classes_) h = detail::fnv1a(c + "\n", h);
    return h;
  }

  bool operator==(const EventVocabulary& o) const {
    return classes_ == o.classes_;
  }

 private:
  std::vector<std::string> classes_;
  std::unordered_map<std::string, int> index_;
};

enum class Subset { kWeak, kUnlabeled, kSynthetic, kValidation };

inline std::string_view to_string(Subset s) {
  switch (s) {
    case Subset::kWeak: return "weak";
    case Subset::kUnlabeled: return "unlabeled";
    case Subset::kSynthetic: return "synthetic";
    case Subset::kValidation: return "validation";
  }
  return "?";
}

inline std::optional<Subset> parse_subset(std::string_view s) {
  if (s == "weak") return Subset::kWeak;
  if (s == "unlabeled") return Subset::kUnlabeled;
  if (s == "synthetic") return Subset::kSynthetic;
  if (s == "validation") return Subset::kValidation;
  return std::nullopt;
}

struct ClipRecord {
  std::string clip_id;
  std::string audio_path;  // relative to the data root
  Subset subset = Subset::kWeak;
  double duration_s = 10.0;
};

/// A timed event, used both for references and for system output.
struct DetectionEvent {
  std::string label;
  double onset = 0.0;
  double offset = 0.0;

  bool operator==(const DetectionEvent&) const = default;
};

struct WeakLabel {
  std::string clip_id;
  std::set<std::string> events;

  bool operator==(const WeakLabel&) const = default;
};

struct StrongAnnotation {
  std::string clip_id;
  std::vector<DetectionEvent> events;  // ordered by onset

  bool operator==(const StrongAnnotation&) const = default;
};

/// counts(c, i) = number of clips whose label set has exactly i classes and
/// contains class c. Sized to the largest cardinality observed.
class CooccurrenceTable {
 public:
  CooccurrenceTable(int num_classes, int max_cardinality)
      : num_classes_(num_classes),
        max_card_(max_cardinality),
        counts_(static_cast<std::size_t>(num_classes) * (max_cardinality + 1),
                0) {}

  int num_classes() const { return num_classes_; }
  int max_cardinality() const { return max_card_; }

  long long count(int c, int i) const {
    if (c < 0 || c >= num_classes_) throw Error("class index out of range");
    if (i < 0 || i > max_card_) return 0;
    return counts_[static_cast<std::size_t>(c) * (max_card_ + 1) + i];
  }
  long long& at(int c, int i) {
    if (c < 0 || c >= num_classes_ || i < 0 || i > max_card_)
      throw Error("cooccurrence index out of range");
    return counts_[static_cast<std::size_t>(c) * (max_card_ + 1) + i];
  }

 private:
  int num_classes_;
  int max_card_;
  std::vector<long long> counts_;
};

namespace detail {

inline bool is_header(std::string_view first_field) {
  first_field = trim(first_field);
  return first_field == "filename" || first_field == "clip_id" ||
         first_field == "event_label";
}

inline std::string format_seconds(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error("cannot format number");
  std::string s(buf.data(), ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace detail

/// Parses "filename<TAB>label,label,..." lines. An optional header line is
/// skipped. Repeated rows for the same clip merge into one label set.
inline std::vector<WeakLabel> parse_weak_labels(std::string_view text,
                                                const EventVocabulary& vocab) {
  std::vector<WeakLabel> out;
  std::unordered_map<std::string, std::size_t> where;
  const auto rows = detail::lines(text);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto row = rows[n];
    if (detail::trim(row).empty()) continue;
    const auto fields = detail::split(row, '\t');
    if (n == 0 && detail::is_header(fields[0])) continue;
    if (fields.size() != 2)
      throw ParseError("expected filename<TAB>labels", n + 1);
    const std::string clip(detail::trim(fields[0]));
    if (clip.empty()) throw ParseError("empty filename", n + 1);
    std::set<std::string> events;
    for (auto tok : detail::split(fields[1], ',')) {
      tok = detail::trim(tok);
      if (tok.empty()) throw ParseError("empty label", n + 1);
      if (!vocab.find(tok))
        throw ParseError("unknown class '" + std::string(tok) + "'", n + 1);
      events.emplace(tok);
    }
    auto [it, fresh] = where.emplace(clip, out.size());
    if (fresh) {
      out.push_back({clip, std::move(events)});
    } else {
      out[it->second].events.merge(events);
    }
  }
  return out;
}

inline std::string format_weak_labels(const std::vector<WeakLabel>& labels) {
  std::string s = "filename\tevent_labels\n";
  for (const auto& l : labels) {
    s += l.clip_id;
    s += '\t';
    bool first = true;
    for (const auto& e : l.events) {
      if (!first) s += ',';
      s += e;
      first = false;
    }
    s += '\n';
  }
  return s;
}

/// Parses "filename<TAB>onset<TAB>offset<TAB>event_label" lines. A row whose
/// onset, offset and label are all empty declares a clip without events.
inline std::vector<StrongAnnotation> parse_strong_labels(
    std::string_view text, const EventVocabulary& vocab) {
  std::vector<StrongAnnotation> out;
  std::unordered_map<std::string, std::size_t> where;
  const auto rows = detail::lines(text);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto row = rows[n];
    if (detail::trim(row).empty()) continue;
    const auto fields = detail::split(row, '\t');
    if (n == 0 && detail::is_header(fields[0])) continue;
    if (fields.size() != 4)
      throw ParseError("expected filename<TAB>onset<TAB>offset<TAB>label",
                       n + 1);
    const std::string clip(detail::trim(fields[0]));
    if (clip.empty()) throw ParseError("empty filename", n + 1);
    auto [it, fresh] = where.emplace(clip, out.size());
    if (fresh) out.push_back({clip, {}});
    const auto label = detail::trim(fields[3]);
    if (detail::trim(fields[1]).empty() && detail::trim(fields[2]).empty() &&
        label.empty())
      continue;
    double on = 0, off = 0;
    if (!detail::parse_double(fields[1], on) ||
        !detail::parse_double(fields[2], off))
      throw ParseError("non-numeric time", n + 1);
    if (!std::isfinite(on) || !std::isfinite(off) || on < 0)
      throw ParseError("invalid time", n + 1);
    if (off <= on) throw ParseError("offset must exceed onset", n + 1);
    if (!vocab.find(label))
      throw ParseError("unknown class '" + std::string(label) + "'", n + 1);
    out[it->second].events.push_back({std::string(label), on, off});
  }
  for (auto& a : out) {
    std::stable_sort(a.events.begin(), a.events.end(),
                     [](const DetectionEvent& x, const DetectionEvent& y) {
                       return x.onset < y.onset;
                     });
  }
  return out;
}

inline std::string format_strong_labels(
    const std::vector<StrongAnnotation>& annotations) {
  std::string s = "filename\tonset\toffset\tevent_label\n";
  for (const auto& a : annotations) {
    if (a.events.empty()) {
      s += a.clip_id + "\t\t\t\n";
      continue;
    }
    for (const auto& e : a.events) {
      s += a.clip_id + '\t' + detail::format_seconds(e.onset) + '\t' +
           detail::format_seconds(e.offset) + '\t' + e.label + '\n';
    }
  }
  return s;
}

/// Drops timestamps, keeping the set of distinct classes per clip.
inline std::vector<WeakLabel> weaken(
    const std::vector<StrongAnnotation>& annotations) {
  std::vector<WeakLabel> out;
  out.reserve(annotations.size());
  for (const auto& a : annotations) {
    WeakLabel w{a.clip_id, {}};
    for (const auto& e : a.events) w.events.insert(e.label);
    out.push_back(std::move(w));
  }
  return out;
}

inline CooccurrenceTable count_cooccurrence(const std::vector<WeakLabel>& labels,
                                            const EventVocabulary& vocab) {
  int max_card = 0;
  for (const auto& l : labels)
    max_card = std::max(max_card, static_cast<int>(l.events.size()));
  CooccurrenceTable table(vocab.size(), max_card);
  for (const auto& l : labels) {
    const int card = static_cast<int>(l.events.size());
    for (const auto& e : l.events) table.at(vocab.index_of(e), card) += 1;
  }
  return table;
}

/// Binary tag vector (one entry per class) for a weak label.
inline std::vector<int> to_tags(const WeakLabel& label,
                                const EventVocabulary& vocab) {
  std::vector<int> tags(vocab.size(), 0);
  for (const auto& e : label.events) tags[vocab.index_of(e)] = 1;
  return tags;
}

/// Mean event length per class; nullopt for classes with no events.
inline std::vector<std::optional<double>> average_durations(
    const std::vector<StrongAnnotation>& annotations,
    const EventVocabulary& vocab) {
  std::vector<double> total(vocab.size(), 0.0);
  std::vector<long long> count(vocab.size(), 0);
  for (const auto& a : annotations) {
    for (const auto& e : a.events) {
      const int c = vocab.index_of(e.label);
      total[c] += e.offset - e.onset;
      count[c] += 1;
    }
  }
  std::vector<std::optional<double>> out(vocab.size());
  for (int c = 0; c < vocab.size(); ++c)
    if (count[c] > 0) out[c] = total[c] / static_cast<double>(count[c]);
  return out;
}

/// "event_label<TAB>avg_duration_s" table; every vocabulary class required.
inline std::vector<double> parse_durations(std::string_view text,
                                           const EventVocabulary& vocab) {
  std::vector<std::optional<double>> got(vocab.size());
  const auto rows = detail::lines(text);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    if (detail::trim(rows[n]).empty()) continue;
    const auto fields = detail::split(rows[n], '\t');
    if (n == 0 && detail::is_header(fields[0])) continue;
    if (fields.size() != 2) throw ParseError("expected label<TAB>seconds", n + 1);
    const auto c = vocab.find(detail::trim(fields[0]));
    if (!c) throw ParseError("unknown class", n + 1);
    double v = 0;
    if (!detail::parse_double(fields[1], v) || !(v > 0))
      throw ParseError("duration must be a positive number", n + 1);
    got[*c] = v;
  }
  std::vector<double> out;
  for (int c = 0; c < vocab.size(); ++c) {
    if (!got[c]) throw ValidationError("missing duration for " + vocab.name(c));
    out.push_back(*got[c]);
  }
  return out;
}

inline std::string format_durations(const std::vector<double>& durations,
                                    const EventVocabulary& vocab) {
  std::string s = "event_label\tavg_duration_s\n";
  for (int c = 0; c < vocab.size(); ++c)
    s += vocab.name(c) + '\t' + detail::format_seconds(durations.at(c)) + '\n';
  return s;
}

/// "clip_id<TAB>path<TAB>subset<TAB>duration" with an optional header.
inline std::vector<ClipRecord> parse_manifest(std::string_view text) {
  std::vector<ClipRecord> out;
  std::unordered_set<std::string> seen;
  const auto rows = detail::lines(text);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    if (detail::trim(rows[n]).empty()) continue;
    const auto fields = detail::split(rows[n], '\t');
    if (n == 0 && detail::is_header(fields[0])) continue;
    if (fields.size() != 4)
      throw ParseError("expected clip_id<TAB>path<TAB>subset<TAB>duration",
                       n + 1);
    ClipRecord r;
    r.clip_id = std::string(detail::trim(fields[0]));
    r.audio_path = std::string(detail::trim(fields[1]));
    auto subset = parse_subset(detail::trim(fields[2]));
    if (!subset) throw ParseError("unknown subset", n + 1);
    r.subset = *subset;
    if (!detail::parse_double(fields[3], r.duration_s) || !(r.duration_s > 0))
      throw ParseError("duration must be positive", n + 1);
    if (r.clip_id.empty()) throw ParseError("empty clip_id", n + 1);
    if (!seen.insert(r.clip_id).second)
      throw ParseError("duplicate clip_id " + r.clip_id, n + 1);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string format_manifest(const std::vector<ClipRecord>& clips) {
  std::string s = "clip_id\tpath\tsubset\tduration\n";
  for (const auto& c : clips)
    s += c.clip_id + '\t' + c.audio_path + '\t' +
         std::string(to_string(c.subset)) + '\t' +
         detail::format_seconds(c.duration_s) + '\n';
  return s;
}

}  // namespace sedgl
