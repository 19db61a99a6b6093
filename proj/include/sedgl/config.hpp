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

// Run configuration: an INI file with [data], [features], [ps], [pt], [df],
// [train] and [post] sections.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sedgl/corpus.hpp"
#include "sedgl/disentangled.hpp"
#include "sedgl/features.hpp"
#include "sedgl/inference.hpp"
#include "sedgl/metrics.hpp"
#include "sedgl/model.hpp"
#include "sedgl/trainer.hpp"

namespace sedgl {

struct RunConfig {
  // [data]; paths other than root are relative to root.
  std::string root = ".";
  std::string manifest = "manifest.tsv";
  std::string weak_labels = "weak.tsv";
  std::string synthetic_labels;  // strong labels, used weakly
  std::string validation_labels = "validation.tsv";
  std::string durations;  // optional per-class average durations
  std::string feature_dir = "features";
  bool include_synthetic = true;
  std::vector<std::string> classes;  // empty selects the DCASE 2019 classes

  FeatureConfig features;
  EncoderConfig ps = EncoderConfig::ps();
  EncoderConfig pt = EncoderConfig::pt();
  DFConfig df;
  bool use_df = true;

  TrainMode mode = TrainMode::kGuided;
  GLConfig gl;
  AugmentConfig augment;
  std::vector<std::uint64_t> seeds = {1};
  std::string run_dir = "runs/default";

  double beta = 1.0 / 3.0;
  int fixed_window = 0;  // > 0 disables adaptive windows
  CollarConfig collars;

  std::filesystem::path base_dir = ".";  // directory of the config file

  EventVocabulary vocabulary() const {
    return classes.empty() ? EventVocabulary::dcase2019() : EventVocabulary(classes);
  }
  std::filesystem::path data_root() const {
    std::filesystem::path r(root);
    return r.is_absolute() ? r : base_dir / r;
  }
  std::filesystem::path data_path(const std::string& rel) const {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : data_root() / p;
  }
  std::filesystem::path run_path() const {
    std::filesystem::path p(run_dir);
    return p.is_absolute() ? p : base_dir / p;
  }

  /// Checks value ranges; with check_files also that referenced inputs exist.
  void validate(bool check_files) const {
    features.validate();
    ps.validate();
    pt.validate();
    df.validate();
    gl.validate();
    if (seeds.empty()) throw ValidationError("seed list is empty");
    if (!(beta > 0)) throw ValidationError("beta must be positive");
    if (fixed_window < 0) throw ValidationError("fixed_window must be >= 0");
    if (ps.n_mels != features.n_mels || pt.n_mels != features.n_mels ||
        ps.input_frames != features.target_frames || pt.input_frames != features.target_frames)
      throw ValidationError("encoder input size must match the feature configuration");
    if (mode == TrainMode::kGuided && ps.total_time_pool() >= pt.total_time_pool())
      throw ValidationError("the teacher must pool time more coarsely than the student");
    vocabulary();
    if (check_files) {
      for (const auto& f : {manifest, weak_labels, validation_labels})
        if (!f.empty() && !std::filesystem::exists(data_path(f)))
          throw ValidationError("missing input file: " + data_path(f).string());
      if (include_synthetic && !synthetic_labels.empty() && !std::filesystem::exists(data_path(synthetic_labels)))
        throw ValidationError("missing input file: " + data_path(synthetic_labels).string());
      if (!durations.empty() && !std::filesystem::exists(data_path(durations)))
        throw ValidationError("missing input file: " + data_path(durations).string());
    }
  }
};

namespace detail {

template <typename T>
std::vector<T> parse_list(const std::string& s, const std::string& key) {
  std::vector<T> out;
  for (auto tok : split(s, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    if constexpr (std::is_same_v<T, std::string>) {
      out.emplace_back(tok);
    } else if constexpr (std::is_floating_point_v<T>) {
      double v;
      if (!parse_double(tok, v)) throw ValidationError("bad number in " + key);
      out.push_back(static_cast<T>(v));
    } else {
      long long v;
      if (!parse_int(tok, v)) throw ValidationError("bad integer in " + key);
      out.push_back(static_cast<T>(v));
    }
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ValidationError("bad boolean for " + key);
}

}  // namespace detail

inline std::string format_config(const RunConfig& c);

inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }
  {
    // The writer emits every key the reader understands, except
    // train.repetitions, which it expands into seeds.
    RunConfig all;
    all.classes = {"x"};
    pt::ptree known;
    std::istringstream k(format_config(all));
    pt::read_ini(k, known);
    known.put("train.repetitions", "");
    for (const auto& [section, body] : tree) {
      const auto sec = known.get_child_optional(pt::ptree::path_type(section, '\0'));
      if (!sec) throw ValidationError("unknown config section [" + section + "]");
      for (const auto& kv : body)
        if (!sec->get_child_optional(pt::ptree::path_type(kv.first, '\0')))
          throw ValidationError("unknown config key " + section + "." + kv.first);
    }
  }
  RunConfig c;
  c.base_dir = base_dir;
  auto str = [&](const char* key, std::string def) { return tree.get<std::string>(key, def); };
  auto num = [&](const char* key, double def) {
    const auto s = tree.get_optional<std::string>(key);
    if (!s) return def;
    double v;
    if (!detail::parse_double(*s, v)) throw ValidationError(std::string("bad number for ") + key);
    return v;
  };
  auto integer = [&](const char* key, long long def) {
    const auto s = tree.get_optional<std::string>(key);
    if (!s) return def;
    long long v;
    if (!detail::parse_int(*s, v)) throw ValidationError(std::string("bad integer for ") + key);
    return v;
  };
  auto ints = [&](const char* key, const std::vector<int>& def) {
    const auto s = tree.get_optional<std::string>(key);
    return s ? detail::parse_list<int>(*s, key) : def;
  };
  auto boolean = [&](const char* key, bool def) {
    const auto s = tree.get_optional<std::string>(key);
    return s ? detail::parse_bool(*s, key) : def;
  };

  c.root = str("data.root", c.root);
  c.manifest = str("data.manifest", c.manifest);
  c.weak_labels = str("data.weak_labels", c.weak_labels);
  c.synthetic_labels = str("data.synthetic_labels", c.synthetic_labels);
  c.validation_labels = str("data.validation_labels", c.validation_labels);
  c.durations = str("data.durations", c.durations);
  c.feature_dir = str("data.feature_dir", c.feature_dir);
  c.include_synthetic = boolean("data.include_synthetic", c.include_synthetic);
  if (auto s = tree.get_optional<std::string>("data.classes"))
    c.classes = detail::parse_list<std::string>(*s, "data.classes");

  auto& f = c.features;
  f.sample_rate = static_cast<int>(integer("features.sample_rate", f.sample_rate));
  f.n_mels = static_cast<int>(integer("features.n_mels", f.n_mels));
  f.frame_length_ms = num("features.frame_length_ms", f.frame_length_ms);
  f.hop_ms = num("features.hop_ms", f.hop_ms);
  f.fft_size = static_cast<int>(integer("features.fft_size", f.fft_size));
  f.target_frames = static_cast<int>(integer("features.target_frames", f.target_frames));
  f.fmin = num("features.fmin", f.fmin);
  f.fmax = num("features.fmax", f.fmax);

  c.ps = EncoderConfig::ps(f.n_mels, f.target_frames);
  c.pt = EncoderConfig::pt(f.n_mels, f.target_frames);
  for (auto* e : {&c.ps, &c.pt}) {
    const std::string sec = e == &c.ps ? "ps." : "pt.";
    e->channels = ints((sec + "channels").c_str(), e->channels);
    e->kernels = ints((sec + "kernels").c_str(), e->kernels);
    e->time_pool = ints((sec + "time_pool").c_str(), e->time_pool);
    e->freq_pool = ints((sec + "freq_pool").c_str(), e->freq_pool);
  }

  c.use_df = boolean("df.enabled", c.use_df);
  c.df.m = num("df.m", c.df.m);
  if (auto s = tree.get_optional<std::string>("df.r")) c.df.r = detail::parse_list<double>(*s, "df.r");

  const auto mode = str("train.mode", "gl");
  if (mode == "gl") c.mode = TrainMode::kGuided;
  else if (mode == "atp_df") c.mode = TrainMode::kAtpDf;
  else throw ValidationError("train.mode must be gl or atp_df");
  auto& g = c.gl;
  g.gamma = num("train.gamma", g.gamma);
  g.start_epoch = static_cast<int>(integer("train.start_epoch", g.start_epoch));
  g.batch_size = static_cast<int>(integer("train.batch_size", g.batch_size));
  g.lr = num("train.lr", g.lr);
  g.lr_decay = num("train.lr_decay", g.lr_decay);
  g.decay_every = static_cast<int>(integer("train.decay_every", g.decay_every));
  g.patience = static_cast<int>(integer("train.patience", g.patience));
  g.max_epochs = static_cast<int>(integer("train.max_epochs", g.max_epochs));
  c.augment.time_shift = boolean("train.augment_shift", c.augment.time_shift);
  c.augment.max_shift = static_cast<int>(integer("train.max_shift", c.augment.max_shift));
  c.augment.noise = boolean("train.augment_noise", c.augment.noise);
  c.augment.noise_sigma = num("train.noise_sigma", c.augment.noise_sigma);
  if (auto s = tree.get_optional<std::string>("train.seeds")) {
    c.seeds = detail::parse_list<std::uint64_t>(*s, "train.seeds");
  } else if (auto r = tree.get_optional<std::string>("train.repetitions")) {
    long long n;
    if (!detail::parse_int(*r, n) || n < 1) throw ValidationError("bad train.repetitions");
    c.seeds.clear();
    for (long long i = 1; i <= n; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
  }
  c.run_dir = str("train.run_dir", c.run_dir);

  c.beta = num("post.beta", c.beta);
  c.fixed_window = static_cast<int>(integer("post.fixed_window", c.fixed_window));
  g.alpha = num("post.alpha", g.alpha);
  c.collars.onset_collar = num("post.onset_collar", c.collars.onset_collar);
  c.collars.offset_collar_abs = num("post.offset_collar", c.collars.offset_collar_abs);
  c.collars.offset_collar_rel = num("post.offset_collar_rel", c.collars.offset_collar_rel);
  c.collars.segment_length = num("post.segment_length", c.collars.segment_length);
  c.validate(false);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  return parse_config(detail::read_file(path), std::filesystem::path(path).parent_path());
}

/// Canonical INI rendering; parse_config(format_config(c)) reproduces c.
inline std::string format_config(const RunConfig& c) {
  using detail::fmt;
  using detail::join;
  std::ostringstream s;
  s << "[data]\nroot = " << c.root << "\nmanifest = " << c.manifest << "\nweak_labels = " << c.weak_labels
    << "\nsynthetic_labels = " << c.synthetic_labels << "\nvalidation_labels = " << c.validation_labels
    << "\ndurations = " << c.durations << "\nfeature_dir = " << c.feature_dir
    << "\ninclude_synthetic = " << (c.include_synthetic ? "true" : "false") << "\n";
  if (!c.classes.empty()) s << "classes = " << join(c.classes) << "\n";
  const auto& f = c.features;
  s << "\n[features]\nsample_rate = " << f.sample_rate << "\nn_mels = " << f.n_mels
    << "\nframe_length_ms = " << fmt(f.frame_length_ms) << "\nhop_ms = " << fmt(f.hop_ms)
    << "\nfft_size = " << f.fft_size << "\ntarget_frames = " << f.target_frames << "\nfmin = " << fmt(f.fmin)
    << "\nfmax = " << fmt(f.fmax) << "\n";
  for (const auto* e : {&c.ps, &c.pt}) {
    s << "\n[" << (e == &c.ps ? "ps" : "pt") << "]\nchannels = " << join(e->channels)
      << "\nkernels = " << join(e->kernels) << "\ntime_pool = " << join(e->time_pool)
      << "\nfreq_pool = " << join(e->freq_pool) << "\n";
  }
  s << "\n[df]\nenabled = " << (c.use_df ? "true" : "false") << "\nm = " << fmt(c.df.m)
    << "\nr = " << join(c.df.r) << "\n";
  const auto& g = c.gl;
  s << "\n[train]\nmode = " << to_string(c.mode) << "\ngamma = " << fmt(g.gamma)
    << "\nstart_epoch = " << g.start_epoch << "\nbatch_size = " << g.batch_size << "\nlr = " << fmt(g.lr)
    << "\nlr_decay = " << fmt(g.lr_decay) << "\ndecay_every = " << g.decay_every
    << "\npatience = " << g.patience << "\nmax_epochs = " << g.max_epochs
    << "\naugment_shift = " << (c.augment.time_shift ? "true" : "false") << "\nmax_shift = " << c.augment.max_shift
    << "\naugment_noise = " << (c.augment.noise ? "true" : "false") << "\nnoise_sigma = " << fmt(c.augment.noise_sigma)
    << "\nseeds = " << join(c.seeds) << "\nrun_dir = " << c.run_dir << "\n";
  s << "\n[post]\nbeta = " << fmt(c.beta) << "\nfixed_window = " << c.fixed_window << "\nalpha = " << fmt(g.alpha)
    << "\nonset_collar = " << fmt(c.collars.onset_collar) << "\noffset_collar = " << fmt(c.collars.offset_collar_abs)
    << "\noffset_collar_rel = " << fmt(c.collars.offset_collar_rel)
    << "\nsegment_length = " << fmt(c.collars.segment_length) << "\n";
  return s.str();
}

}  // namespace sedgl
