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

// Per-class feature subspace sizes derived from label co-occurrence.
//
// Each class c keeps only the first k_c coordinates of the encoder output.
// Classes that often occur alone in the training data get a larger
// subspace; the constant m keeps every subspace from collapsing.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sedgl/common.hpp"
#include "sedgl/corpus.hpp"

namespace sedgl {

struct DFConfig {
  double m = 0.04;
  int d = 160;
  /// Importance weight per label cardinality: r[i - 1] weighs clips with i
  /// classes. Cardinalities beyond the list weigh 0.
  std::vector<double> r = {1.0};

  void validate() const {
    if (!(m >= 0 && m < 1)) throw ValidationError("DF margin m must be in [0, 1)");
    if (d < 1) throw ValidationError("DF dimension d must be positive");
    for (double v : r)
      if (!(v >= 0)) throw ValidationError("DF weights r must be non-negative");
  }
  double weight(int cardinality) const {
    return cardinality >= 1 && cardinality <= static_cast<int>(r.size()) ? r[cardinality - 1] : 0.0;
  }
};

struct DFAssignment {
  int d = 0;
  std::vector<double> f;
  std::vector<int> k;
};

/// f_c = (sum_i r_i N_ci) / R with R the largest weighted count over classes.
inline std::vector<double> compute_f(const CooccurrenceTable& counts, const DFConfig& cfg) {
  std::vector<double> score(counts.num_classes(), 0.0);
  for (int c = 0; c < counts.num_classes(); ++c)
    for (int i = 1; i <= counts.max_cardinality(); ++i)
      score[c] += cfg.weight(i) * static_cast<double>(counts.count(c, i));
  const double R = score.empty() ? 0.0 : *std::max_element(score.begin(), score.end());
  if (!(R > 0)) throw Error("no class has a positive weighted count (R = 0)");
  for (auto& s : score) s /= R;
  return score;
}

/// k_c = ceil(((1 - m) f_c + m) d), clamped to [1, d].
inline int compute_k(double f, const DFConfig& cfg) {
  if (!(f >= 0 && f <= 1)) throw Error("f must lie in [0, 1]");
  const double x = ((1 - cfg.m) * f + cfg.m) * cfg.d;
  // Absorb rounding noise so that exact integers are not bumped up.
  const int k = static_cast<int>(std::ceil(x - 1e-9 * std::max(1.0, x)));
  return std::clamp(k, 1, cfg.d);
}

inline DFAssignment assign_df(const CooccurrenceTable& counts, const DFConfig& cfg) {
  cfg.validate();
  DFAssignment a;
  a.d = cfg.d;
  a.f = compute_f(counts, cfg);
  for (double f : a.f) a.k.push_back(compute_k(f, cfg));
  return a;
}

/// Full-width assignment (every class sees all d coordinates).
inline DFAssignment full_assignment(int num_classes, int d) {
  DFAssignment a;
  a.d = d;
  a.f.assign(num_classes, 1.0);
  a.k.assign(num_classes, d);
  return a;
}

/// mask[c][j] = 1 iff j < k_c.
inline std::vector<std::vector<std::uint8_t>> make_masks(const DFAssignment& a) {
  std::vector<std::vector<std::uint8_t>> masks;
  for (int k : a.k) {
    if (k < 1 || k > a.d) throw Error("k out of range [1, d]");
    std::vector<std::uint8_t> m(a.d, 0);
    std::fill(m.begin(), m.begin() + k, 1);
    masks.push_back(std::move(m));
  }
  return masks;
}

inline std::string format_df_report(const DFAssignment& a, const EventVocabulary& vocab) {
  std::string s = "event_label\tf\tk\n";
  for (int c = 0; c < vocab.size(); ++c) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", a.f.at(c));
    s += vocab.name(c) + '\t' + buf + '\t' + std::to_string(a.k.at(c)) + '\n';
  }
  return s;
}

}  // namespace sedgl
