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

// Subcommand implementations behind the sedgl tool. Each command reads a
// RunConfig and writes plain files; all of them are deterministic given the
// configuration and seeds.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sedgl/audio.hpp"
#include "sedgl/checkpoint.hpp"
#include "sedgl/config.hpp"
#include "sedgl/corpus.hpp"
#include "sedgl/disentangled.hpp"
#include "sedgl/features.hpp"
#include "sedgl/inference.hpp"
#include "sedgl/metrics.hpp"
#include "sedgl/plot.hpp"
#include "sedgl/toy.hpp"
#include "sedgl/trainer.hpp"

namespace sedgl {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Corpus loading

struct Corpus {
  EventVocabulary vocab;
  std::vector<ClipRecord> manifest;
  std::vector<WeakLabel> weak;                // one per weak manifest clip
  std::vector<StrongAnnotation> synthetic;    // one per synthetic manifest clip
  std::vector<StrongAnnotation> validation;   // one per validation manifest clip
  std::vector<std::string> unlabeled;         // clip ids

  std::map<std::string, double> durations() const {
    std::map<std::string, double> d;
    for (const auto& c : manifest) d[c.clip_id] = c.duration_s;
    return d;
  }
};

/// Reads the manifest and label files. Labeled clips must be listed in the
/// manifest under the matching subset. Strongly labeled manifest clips with
/// no label rows are event-free.
inline Corpus load_corpus(const RunConfig& cfg) {
  Corpus c;
  c.vocab = cfg.vocabulary();
  c.manifest = parse_manifest(detail::read_file(cfg.data_path(cfg.manifest).string()));
  std::unordered_map<std::string, const ClipRecord*> by_id;
  for (const auto& r : c.manifest) by_id[r.clip_id] = &r;
  auto check_subset = [&](const std::string& id, Subset want, const std::string& file) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError(file + ": clip '" + id + "' is not in the manifest");
    if (it->second->subset != want)
      throw ValidationError(file + ": clip '" + id + "' is listed as " + std::string(to_string(it->second->subset)));
  };

  std::unordered_map<std::string, WeakLabel> weak;
  if (!cfg.weak_labels.empty()) {
    for (auto& w : parse_weak_labels(detail::read_file(cfg.data_path(cfg.weak_labels).string()), c.vocab)) {
      check_subset(w.clip_id, Subset::kWeak, cfg.weak_labels);
      weak[w.clip_id] = std::move(w);
    }
  }
  auto load_strong = [&](const std::string& file, Subset subset) {
    std::unordered_map<std::string, StrongAnnotation> m;
    if (file.empty()) return m;
    for (auto& a : parse_strong_labels(detail::read_file(cfg.data_path(file).string()), c.vocab)) {
      check_subset(a.clip_id, subset, file);
      const double dur = by_id[a.clip_id]->duration_s;
      for (const auto& e : a.events)
        if (e.offset > dur + 1e-6)
          throw ValidationError(file + ": event in '" + a.clip_id + "' ends after the clip");
      m[a.clip_id] = std::move(a);
    }
    return m;
  };
  auto synthetic = cfg.include_synthetic ? load_strong(cfg.synthetic_labels, Subset::kSynthetic)
                                         : std::unordered_map<std::string, StrongAnnotation>{};
  auto validation = load_strong(cfg.validation_labels, Subset::kValidation);

  for (const auto& r : c.manifest) {
    switch (r.subset) {
      case Subset::kWeak: {
        auto it = weak.find(r.clip_id);
        if (it == weak.end() || it->second.events.empty())
          throw ValidationError("weak clip '" + r.clip_id + "' has no labels");
        c.weak.push_back(it->second);
        break;
      }
      case Subset::kSynthetic:
        if (!cfg.include_synthetic) break;
        if (auto it = synthetic.find(r.clip_id); it != synthetic.end()) c.synthetic.push_back(it->second);
        else c.synthetic.push_back({r.clip_id, {}});
        break;
      case Subset::kValidation:
        if (auto it = validation.find(r.clip_id); it != validation.end()) c.validation.push_back(it->second);
        else c.validation.push_back({r.clip_id, {}});
        break;
      case Subset::kUnlabeled:
        c.unlabeled.push_back(r.clip_id);
        break;
    }
  }
  return c;
}

/// Clip-level labels the models train on: weak clips plus, when enabled,
/// the synthetic clips with their timestamps dropped.
inline std::vector<WeakLabel> training_labels(const Corpus& c) {
  std::vector<WeakLabel> out = c.weak;
  for (auto& w : weaken(c.synthetic))
    if (!w.events.empty()) out.push_back(std::move(w));
  return out;
}

// ---------------------------------------------------------------------------
// Feature store

inline fs::path feature_root(const RunConfig& cfg) { return cfg.data_path(cfg.feature_dir); }

inline std::string feature_file_name(const std::string& clip_id) {
  std::string s = clip_id;
  for (auto& ch : s)
    if (ch == '/' || ch == '\\' || ch == ':') ch = '_';
  return s + ".sgfm";
}

inline std::string fingerprint_hex(std::uint64_t v) {
  char b[20];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(v));
  return b;
}

struct FeatureIndexEntry {
  std::string clip_id, file;
  int rows = 0, cols = 0;
  std::string checksum;
};

struct FeatureIndex {
  std::string fingerprint;
  std::vector<FeatureIndexEntry> entries;
};

inline std::string format_feature_index(const FeatureIndex& idx) {
  std::string s = "# features " + idx.fingerprint + "\nclip_id\tfile\trows\tcols\tchecksum\n";
  for (const auto& e : idx.entries)
    s += e.clip_id + '\t' + e.file + '\t' + std::to_string(e.rows) + '\t' + std::to_string(e.cols) + '\t' +
         e.checksum + '\n';
  return s;
}

inline FeatureIndex parse_feature_index(std::string_view text) {
  FeatureIndex idx;
  const auto rows = detail::lines(text);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto row = detail::trim(rows[n]);
    if (row.empty()) continue;
    if (row.rfind("# features ", 0) == 0) {
      idx.fingerprint = std::string(row.substr(11));
      continue;
    }
    const auto f = detail::split(row, '\t');
    if (f[0] == "clip_id") continue;
    if (f.size() != 5) throw ParseError("bad feature index row", n + 1);
    FeatureIndexEntry e;
    e.clip_id = std::string(f[0]);
    e.file = std::string(f[1]);
    long long r = 0, c = 0;
    if (!detail::parse_int(f[2], r) || !detail::parse_int(f[3], c)) throw ParseError("bad feature index size", n + 1);
    e.rows = static_cast<int>(r);
    e.cols = static_cast<int>(c);
    e.checksum = std::string(f[4]);
    idx.entries.push_back(std::move(e));
  }
  return idx;
}

struct ExtractReport {
  int written = 0;
  int reused = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // (audio path, reason)
};

/// Extracts log-mel features for every manifest clip into the feature
/// directory plus index.tsv. Files whose index entry matches the current
/// feature configuration are kept unless force is set. Unreadable audio is
/// reported and skipped.
inline ExtractReport cmd_extract(const RunConfig& cfg, std::ostream& log, bool force = false, int threads = 0) {
  cfg.features.validate();
  const auto manifest = parse_manifest(detail::read_file(cfg.data_path(cfg.manifest).string()));
  const fs::path root = feature_root(cfg);
  fs::create_directories(root);
  const std::string fp = fingerprint_hex(cfg.features.fingerprint());

  std::unordered_map<std::string, FeatureIndexEntry> previous;
  if (!force && fs::exists(root / "index.tsv")) {
    try {
      auto old = parse_feature_index(detail::read_file((root / "index.tsv").string()));
      if (old.fingerprint == fp)
        for (auto& e : old.entries) previous[e.clip_id] = std::move(e);
    } catch (const ParseError&) {
      previous.clear();
    }
  }

  struct Slot {
    std::optional<FeatureIndexEntry> entry;
    std::string error;
    bool reused = false;
  };
  std::vector<Slot> slots(manifest.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    MelExtractor extractor(cfg.features);
    for (std::size_t i = next++; i < manifest.size(); i = next++) {
      const auto& clip = manifest[i];
      const std::string file = feature_file_name(clip.clip_id);
      const fs::path out = root / file;
      auto& slot = slots[i];
      if (auto it = previous.find(clip.clip_id); it != previous.end() && fs::exists(out)) {
        const auto bytes = detail::read_file(out.string());
        if (fingerprint_hex(detail::fnv1a(bytes)) == it->second.checksum) {
          slot.entry = it->second;
          slot.reused = true;
          continue;
        }
      }
      try {
        auto wave = read_wav(cfg.data_path(clip.audio_path).string());
        if (wave.sample_rate != cfg.features.sample_rate) {
          wave.samples = resample(wave.samples, wave.sample_rate, cfg.features.sample_rate);
          wave.sample_rate = cfg.features.sample_rate;
        }
        auto m = extractor.extract(wave);
        m.clip_id = clip.clip_id;
        const std::string bytes = encode_matrix(m);
        detail::write_file(out.string(), bytes);
        slot.entry = FeatureIndexEntry{clip.clip_id, file, m.rows, m.cols, fingerprint_hex(detail::fnv1a(bytes))};
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  };
  const int n = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ExtractReport report;
  FeatureIndex index{fp, {}};
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (slots[i].entry) {
      index.entries.push_back(*slots[i].entry);
      slots[i].reused ? ++report.reused : ++report.written;
    } else {
      const auto path = cfg.data_path(manifest[i].audio_path).string();
      log << "cannot extract " << path << ": " << slots[i].error << "\n";
      report.failures.emplace_back(path, slots[i].error);
    }
  }
  detail::write_file((root / "index.tsv").string(), format_feature_index(index));
  log << "extracted " << report.written << ", unchanged " << report.reused << ", failed " << report.failures.size()
      << "\n";
  return report;
}

/// Loads features for the given clips; the index must match the configured
/// front end.
inline std::vector<FeatureMatrix> load_features(const RunConfig& cfg, const std::vector<std::string>& clip_ids) {
  const fs::path root = feature_root(cfg);
  if (!fs::exists(root / "index.tsv")) throw ValidationError("no feature index in " + root.string() + "; run extract");
  const auto idx = parse_feature_index(detail::read_file((root / "index.tsv").string()));
  if (idx.fingerprint != fingerprint_hex(cfg.features.fingerprint()))
    throw ValidationError("features in " + root.string() + " were extracted with a different configuration");
  std::unordered_map<std::string, const FeatureIndexEntry*> by_id;
  for (const auto& e : idx.entries) by_id[e.clip_id] = &e;
  std::vector<FeatureMatrix> out;
  out.reserve(clip_ids.size());
  for (const auto& id : clip_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("no features for clip '" + id + "'");
    auto m = read_matrix((root / it->second->file).string(), id);
    if (m.rows != cfg.features.target_frames || m.cols != cfg.features.n_mels)
      throw ValidationError("feature shape mismatch for clip '" + id + "'");
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model and post-processing setup

inline DFAssignment df_for(const RunConfig& cfg, const CooccurrenceTable& counts, int classes, int d) {
  if (!cfg.use_df) return full_assignment(classes, d);
  DFConfig df = cfg.df;
  df.d = d;
  return assign_df(counts, df);
}

inline WindowPlan window_plan(const RunConfig& cfg, const EventVocabulary& vocab) {
  if (cfg.fixed_window > 0) return fixed_windows(vocab.size(), cfg.fixed_window, cfg.features.hop_ms);
  if (!cfg.durations.empty())
    return adaptive_windows(parse_durations(detail::read_file(cfg.data_path(cfg.durations).string()), vocab),
                            cfg.beta, cfg.features.hop_ms);
  return fixed_windows(vocab.size(), kFixedWindowFrames, cfg.features.hop_ms);
}

inline TrainerSetup trainer_setup(const RunConfig& cfg, const Corpus& corpus, std::uint64_t seed) {
  TrainerSetup s;
  s.mode = cfg.mode;
  s.vocab = corpus.vocab;
  s.gl = cfg.gl;
  s.augment = cfg.augment;
  s.windows = window_plan(cfg, corpus.vocab);
  s.seed = seed;
  const auto counts = count_cooccurrence(training_labels(corpus), corpus.vocab);
  const int c = corpus.vocab.size();
  s.ps = ModelConfig{cfg.ps, c, df_for(cfg, counts, c, cfg.ps.output_dim())};
  if (cfg.mode == TrainMode::kGuided) s.pt = ModelConfig{cfg.pt, c, df_for(cfg, counts, c, cfg.pt.output_dim())};
  return s;
}

inline TrainingData training_data(const RunConfig& cfg, const Corpus& corpus) {
  TrainingData d;
  const auto labels = training_labels(corpus);
  std::vector<std::string> ids;
  for (const auto& l : labels) {
    ids.push_back(l.clip_id);
    d.labeled_tags.push_back(to_tags(l, corpus.vocab));
  }
  d.labeled = load_features(cfg, ids);
  if (cfg.mode == TrainMode::kGuided) d.unlabeled = load_features(cfg, corpus.unlabeled);
  ids.clear();
  for (const auto& a : corpus.validation) ids.push_back(a.clip_id);
  d.validation = load_features(cfg, ids);
  d.validation_refs = corpus.validation;
  return d;
}

// ---------------------------------------------------------------------------
// Training

struct RunResult {
  std::uint64_t seed = 0;
  fs::path dir;
  int best_epoch = 0;
  int epochs = 0;
  ValidationScores best;
};

struct TrainSummary {
  std::vector<RunResult> runs;
  ValidationScores mean, stddev;
};

inline std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

/// Self-contained configuration for one seed: absolute data root and run
/// directory, single seed, fixed mode.
inline RunConfig snapshot_config(const RunConfig& cfg, std::uint64_t seed) {
  RunConfig s = cfg;
  s.root = fs::absolute(cfg.data_root()).lexically_normal().string();
  s.run_dir = fs::absolute(cfg.run_path()).lexically_normal().string();
  s.seeds = {seed};
  return s;
}

namespace detail {

inline ValidationScores mean_of(const std::vector<RunResult>& runs) {
  ValidationScores m;
  for (const auto& r : runs) {
    m.clip_f1 += r.best.clip_f1 / runs.size();
    m.event_f1 += r.best.event_f1 / runs.size();
    m.segment_f1 += r.best.segment_f1 / runs.size();
  }
  return m;
}

inline ValidationScores std_of(const std::vector<RunResult>& runs, const ValidationScores& m) {
  ValidationScores s;
  if (runs.size() < 2) return s;
  for (const auto& r : runs) {
    s.clip_f1 += (r.best.clip_f1 - m.clip_f1) * (r.best.clip_f1 - m.clip_f1);
    s.event_f1 += (r.best.event_f1 - m.event_f1) * (r.best.event_f1 - m.event_f1);
    s.segment_f1 += (r.best.segment_f1 - m.segment_f1) * (r.best.segment_f1 - m.segment_f1);
  }
  const double k = 1.0 / (runs.size() - 1);
  return {std::sqrt(s.clip_f1 * k), std::sqrt(s.event_f1 * k), std::sqrt(s.segment_f1 * k)};
}

inline nlohmann::json scores_json(const ValidationScores& v) {
  return {{"val_clip_f1", v.clip_f1}, {"val_event_f1", v.event_f1}, {"val_segment_f1", v.segment_f1}};
}

inline std::string pm(double m, double s) {
  char b[64];
  std::snprintf(b, sizeof b, "%.4f +/- %.4f", m, s);
  return b;
}

}  // namespace detail

/// Trains one seed into dir. An existing latest.state written under the
/// same configuration snapshot is resumed.
inline RunResult train_seed(const RunConfig& cfg, const Corpus& corpus, const TrainingData& data,
                            std::uint64_t seed, std::ostream& log, bool resume = true) {
  const fs::path dir = cfg.run_path() / seed_dir_name(seed);
  fs::create_directories(dir);
  const std::string snapshot = format_config(snapshot_config(cfg, seed));
  const fs::path state_path = dir / "latest.state", config_path = dir / "config.ini";
  Trainer trainer(data, trainer_setup(cfg, corpus, seed));
  if (resume && fs::exists(state_path) && fs::exists(config_path) &&
      detail::read_file(config_path.string()) == snapshot) {
    trainer.decode_state(detail::read_file(state_path.string()));
    log << "seed " << seed << ": resuming after epoch " << trainer.epoch() << "\n";
  }
  detail::write_file(config_path.string(), snapshot);
  const std::uint64_t ffp = cfg.features.fingerprint();
  auto save_best = [&](Trainer& t) {
    const auto* rec = t.best_record();
    nlohmann::json info = {{"seed", seed}, {"mode", std::string(to_string(cfg.mode))}, {"epoch", t.best_epoch()}};
    if (rec) info.update(detail::scores_json(rec->ps));
    save_checkpoint((dir / "best_ps.ckpt").string(), t.best_ps(), corpus.vocab, ffp, info);
    if (t.best_pt()) save_checkpoint((dir / "best_pt.ckpt").string(), *t.best_pt(), corpus.vocab, ffp, info);
  };
  trainer.fit([&](Trainer& t, const EpochRecord& r) {
    detail::write_file((dir / "history.tsv").string(), format_history(t.history()));
    if (t.improved()) save_best(t);
    detail::write_file(state_path.string(), t.encode_state());
    char b[160];
    std::snprintf(b, sizeof b, "seed %llu epoch %d lr %.6g a %.4f loss %.4f/%.4f val clip %.4f event %.4f\n",
                  static_cast<unsigned long long>(seed), r.epoch, r.lr, r.a, r.loss_ps, r.loss_pt, r.ps.clip_f1,
                  r.ps.event_f1);
    log << b << std::flush;
  });
  detail::write_file((dir / "history.tsv").string(), format_history(trainer.history()));
  save_best(trainer);
  RunResult res{seed, dir, trainer.best_epoch(), trainer.epoch(), {}};
  if (const auto* rec = trainer.best_record()) res.best = rec->ps;
  nlohmann::json summary = {{"seed", seed},
                            {"mode", std::string(to_string(cfg.mode))},
                            {"best_epoch", res.best_epoch},
                            {"epochs", res.epochs}};
  summary.update(detail::scores_json(res.best));
  detail::write_file((dir / "summary.json").string(), summary.dump(2) + "\n");
  return res;
}

/// Trains every configured seed, sequentially unless parallel is set.
inline TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log, bool parallel = false, bool resume = true) {
  cfg.validate(true);
  const Corpus corpus = load_corpus(cfg);
  if (corpus.weak.empty() && corpus.synthetic.empty()) throw ValidationError("no labeled training clips");
  const TrainingData data = training_data(cfg, corpus);
  log << "mode " << to_string(cfg.mode) << ": " << data.labeled.size() << " labeled, " << data.unlabeled.size()
      << " unlabeled, " << data.validation.size() << " validation clips\n";
  TrainSummary summary;
  if (parallel && cfg.seeds.size() > 1) {
    std::vector<std::future<std::pair<RunResult, std::string>>> jobs;
    for (auto seed : cfg.seeds)
      jobs.push_back(std::async(std::launch::async, [&, seed]() {
        std::ostringstream buf;
        auto r = train_seed(cfg, corpus, data, seed, buf, resume);
        return std::make_pair(std::move(r), buf.str());
      }));
    for (auto& j : jobs) {
      auto [r, text] = j.get();
      log << text;
      summary.runs.push_back(std::move(r));
    }
  } else {
    for (auto seed : cfg.seeds) summary.runs.push_back(train_seed(cfg, corpus, data, seed, log, resume));
  }
  summary.mean = detail::mean_of(summary.runs);
  summary.stddev = detail::std_of(summary.runs, summary.mean);
  std::string table = "seed\tbest_epoch\tepochs\tval_clip_f1\tval_event_f1\tval_segment_f1\n";
  for (const auto& r : summary.runs) {
    char b[128];
    std::snprintf(b, sizeof b, "%llu\t%d\t%d\t%.6f\t%.6f\t%.6f\n", static_cast<unsigned long long>(r.seed),
                  r.best_epoch, r.epochs, r.best.clip_f1, r.best.event_f1, r.best.segment_f1);
    table += b;
  }
  detail::write_file((cfg.run_path() / "summary.tsv").string(), table);
  log << "validation clip F1    " << detail::pm(summary.mean.clip_f1, summary.stddev.clip_f1) << "\n"
      << "validation event F1   " << detail::pm(summary.mean.event_f1, summary.stddev.event_f1) << "\n"
      << "validation segment F1 " << detail::pm(summary.mean.segment_f1, summary.stddev.segment_f1) << "\n";
  return summary;
}

// ---------------------------------------------------------------------------
// Prediction

/// Scores the clips of one manifest subset with one checkpoint or the mean
/// of several. Writes predictions.tsv and probs/<clip>.sgfm under out_dir.
inline std::vector<StrongAnnotation> cmd_predict(const RunConfig& cfg, const std::vector<std::string>& checkpoints,
                                                 bool ensemble_flag, const fs::path& out_dir, Subset subset,
                                                 std::ostream& log) {
  if (checkpoints.empty()) throw ValidationError("no checkpoints given");
  if (checkpoints.size() > 1 && !ensemble_flag)
    throw ValidationError("several checkpoints need --ensemble");
  const auto vocab = cfg.vocabulary();
  std::vector<LoadedModel> models;
  for (const auto& p : checkpoints) {
    models.push_back(load_checkpoint(p));
    try {
      check_compatible(models.back(), vocab, cfg.features);
    } catch (const ValidationError& e) {
      throw ValidationError(p + ": " + e.what());
    }
  }
  const auto manifest = parse_manifest(detail::read_file(cfg.data_path(cfg.manifest).string()));
  std::vector<std::string> ids;
  for (const auto& r : manifest)
    if (r.subset == subset) ids.push_back(r.clip_id);
  const auto features = load_features(cfg, ids);
  std::vector<const FeatureMatrix*> ptrs;
  for (const auto& f : features) ptrs.push_back(&f);
  std::vector<std::vector<ProbabilitySet>> per_model;
  for (auto& m : models) per_model.push_back(predict(m.model, ptrs));
  const auto plan = window_plan(cfg, vocab);
  fs::create_directories(out_dir / "probs");
  std::vector<StrongAnnotation> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::vector<ProbabilitySet> sets;
    for (auto& pm : per_model) sets.push_back(pm[i]);
    const auto p = ensemble(sets);
    write_matrix((out_dir / "probs" / feature_file_name(ids[i])).string(), to_dump(p));
    out.push_back({ids[i], decode_events(p, plan, vocab, cfg.gl.alpha)});
  }
  detail::write_file((out_dir / "predictions.tsv").string(), format_submission(out));
  log << "predicted " << ids.size() << " clips with " << models.size() << " model(s)\n";
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvaluationReports {
  ScoreReport event, segment, clip;
};

/// Scores a prediction TSV against a reference TSV. Writes the three
/// reports, a summary and classwise_f1.svg under out_dir.
inline EvaluationReports cmd_evaluate(const RunConfig& cfg, const std::string& refs_path,
                                      const std::string& preds_path, const fs::path& out_dir, std::ostream& log) {
  const auto vocab = cfg.vocabulary();
  auto parse = [&](const std::string& path) {
    try {
      return parse_strong_labels(detail::read_file(path), vocab);
    } catch (const ParseError& e) {
      throw ValidationError(path + ": " + e.what());
    }
  };
  const auto refs = parse(refs_path), preds = parse(preds_path);
  std::map<std::string, double> durations;
  if (fs::exists(cfg.data_path(cfg.manifest)))
    for (const auto& r : parse_manifest(detail::read_file(cfg.data_path(cfg.manifest).string())))
      durations[r.clip_id] = r.duration_s;
  EvaluationReports r;
  r.event = event_based_f1(refs, preds, vocab, cfg.collars, durations);
  r.segment = segment_based_f1(refs, preds, vocab, cfg.collars.segment_length, durations);
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> tags;
  for (const auto& w : weaken(refs)) tags[w.clip_id].first = to_tags(w, vocab);
  for (const auto& w : weaken(preds)) tags[w.clip_id].second = to_tags(w, vocab);
  std::vector<std::vector<int>> rt, pt;
  for (auto& [id, p] : tags) {
    rt.push_back(p.first.empty() ? std::vector<int>(vocab.size(), 0) : p.first);
    pt.push_back(p.second.empty() ? std::vector<int>(vocab.size(), 0) : p.second);
  }
  r.clip = clip_f1(rt, pt, vocab);
  fs::create_directories(out_dir);
  detail::write_file((out_dir / "event_report.tsv").string(), format_report_tsv(r.event));
  detail::write_file((out_dir / "segment_report.tsv").string(), format_report_tsv(r.segment));
  detail::write_file((out_dir / "clip_report.tsv").string(), format_report_tsv(r.clip));
  const std::string summary =
      format_report_summary(r.event) + format_report_summary(r.segment) + format_report_summary(r.clip);
  detail::write_file((out_dir / "summary.txt").string(), summary);
  detail::write_file((out_dir / "classwise_f1.svg").string(),
                     plot::classwise_f1_svg({r.event, r.segment, r.clip}, "Class-wise F1"));
  log << summary;
  return r;
}

// ---------------------------------------------------------------------------
// Ranking, DF report, plots

struct RankedRun {
  std::string run_id;
  fs::path dir;
  int best_epoch = 0;
  double event_f1 = 0;
  fs::path checkpoint;
};

/// Run directories below the given paths: a path holding history.tsv is a
/// run, otherwise its immediate subdirectories are searched.
inline std::vector<fs::path> find_runs(const std::vector<std::string>& paths) {
  std::vector<fs::path> runs;
  for (const auto& p : paths) {
    if (fs::exists(fs::path(p) / "history.tsv")) {
      runs.emplace_back(p);
      continue;
    }
    if (!fs::is_directory(p)) throw ValidationError("not a run directory: " + p);
    std::vector<fs::path> sub;
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_directory() && fs::exists(e.path() / "history.tsv")) sub.push_back(e.path());
    std::sort(sub.begin(), sub.end());
    runs.insert(runs.end(), sub.begin(), sub.end());
  }
  return runs;
}

/// Epoch the trainer kept: first epoch with the highest validation clip F1.
inline const EpochRecord& selected_epoch(const std::vector<EpochRecord>& h) {
  if (h.empty()) throw ValidationError("empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h[i].ps.clip_f1 > h[best].ps.clip_f1) best = i;
  return h[best];
}

/// Orders runs by the validation event F1 of their kept epoch, ties broken
/// by run id, and returns the first k.
inline std::vector<RankedRun> cmd_rank(const std::vector<std::string>& paths, int k) {
  if (k < 1) throw ValidationError("k must be at least 1");
  std::vector<RankedRun> all;
  for (const auto& dir : find_runs(paths)) {
    const auto hist = parse_history(detail::read_file((dir / "history.tsv").string()));
    const auto& rec = selected_epoch(hist);
    all.push_back({dir.lexically_normal().generic_string(), dir, rec.epoch, rec.ps.event_f1, dir / "best_ps.ckpt"});
  }
  if (k > static_cast<int>(all.size()))
    throw ValidationError("requested top " + std::to_string(k) + " but only " + std::to_string(all.size()) +
                          " runs are available");
  std::sort(all.begin(), all.end(), [](const RankedRun& a, const RankedRun& b) {
    if (a.event_f1 != b.event_f1) return a.event_f1 > b.event_f1;
    return a.run_id < b.run_id;
  });
  all.resize(k);
  return all;
}

/// DF dimensions of the student model from the training labels.
inline DFAssignment cmd_df(const RunConfig& cfg) {
  const auto corpus = load_corpus(cfg);
  const auto counts = count_cooccurrence(training_labels(corpus), corpus.vocab);
  DFConfig df = cfg.df;
  df.d = cfg.ps.output_dim();
  return assign_df(counts, df);
}

inline std::string cmd_plot(const std::vector<std::string>& paths) {
  std::vector<std::pair<std::string, std::vector<EpochRecord>>> runs;
  for (const auto& dir : find_runs(paths))
    runs.emplace_back(dir.filename().string(), parse_history(detail::read_file((dir / "history.tsv").string())));
  if (runs.empty()) throw ValidationError("no run histories found");
  return plot::history_svg(runs);
}

// ---------------------------------------------------------------------------
// Toy corpus

struct ToyOptions {
  int weak = 200;
  int unlabeled = 400;
  int synthetic = 0;
  int validation = 60;
  std::uint64_t seed = 7;
  toy::ClipSpec spec = [] {
    toy::ClipSpec s;
    s.sample_rate = 22050;
    s.min_level = 0.035;
    s.max_hiss = 0.018;
    s.max_distractors = 2;
    return s;
  }();
};

/// Feature and model sizes for the toy corpus; small enough for one CPU core.
inline RunConfig toy_config(int sample_rate = 22050) {
  RunConfig c;
  c.classes = toy::vocabulary().classes();
  c.manifest = "manifest.tsv";
  c.weak_labels = "weak.tsv";
  c.synthetic_labels = "synthetic.tsv";
  c.validation_labels = "validation.tsv";
  c.durations = "durations.tsv";
  c.features.sample_rate = sample_rate;
  c.features.n_mels = 32;
  c.features.fft_size = sample_rate > 32000 ? 2048 : 1024;
  c.ps = EncoderConfig::ps(32, 500);
  c.ps.channels = {16, 16, 16};
  c.ps.freq_pool = {4, 4, 2};
  c.pt = EncoderConfig::pt(32, 500);
  c.pt.channels = {8, 8, 16};
  c.pt.freq_pool = {4, 4, 2};
  c.gl.max_epochs = 40;
  c.run_dir = "runs/gl";
  return c;
}

/// Writes a complete toy corpus: audio/*.wav, manifest, label files, a
/// duration table and config.ini.
inline void cmd_make_toy(const fs::path& out, const ToyOptions& opt, std::ostream& log) {
  fs::create_directories(out / "audio");
  std::mt19937_64 rng(opt.seed);
  std::vector<ClipRecord> manifest;
  std::vector<WeakLabel> weak;
  std::vector<StrongAnnotation> synthetic, validation;
  auto emit = [&](const std::string& prefix, int n, Subset subset, toy::ClipSpec spec) {
    for (int i = 0; i < n; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s_%04d.wav", prefix.c_str(), i);
      auto clip = toy::make_clip(id, spec, rng);
      const std::string rel = std::string("audio/") + id;
      write_wav((out / rel).string(), clip.audio);
      manifest.push_back({id, rel, subset, spec.duration_s});
      if (subset == Subset::kWeak) weak.push_back(weaken({clip.labels})[0]);
      if (subset == Subset::kSynthetic) synthetic.push_back(clip.labels);
      if (subset == Subset::kValidation) validation.push_back(clip.labels);
    }
  };
  auto unlabeled_spec = opt.spec;
  unlabeled_spec.min_events = 0;
  auto synthetic_spec = opt.spec;
  synthetic_spec.domain = toy::Domain::kSynthetic;
  emit("weak", opt.weak, Subset::kWeak, opt.spec);
  emit("unlabeled", opt.unlabeled, Subset::kUnlabeled, unlabeled_spec);
  emit("synthetic", opt.synthetic, Subset::kSynthetic, synthetic_spec);
  emit("validation", opt.validation, Subset::kValidation, opt.spec);

  const auto vocab = toy::vocabulary();
  detail::write_file((out / "manifest.tsv").string(), format_manifest(manifest));
  detail::write_file((out / "weak.tsv").string(), format_weak_labels(weak));
  detail::write_file((out / "synthetic.tsv").string(), format_strong_labels(synthetic));
  detail::write_file((out / "validation.tsv").string(), format_strong_labels(validation));
  const auto avg = average_durations(synthetic.empty() ? validation : synthetic, vocab);
  std::vector<double> dur;
  for (const auto& a : avg) dur.push_back(a.value_or((opt.spec.min_event_s + opt.spec.max_event_s) / 2));
  detail::write_file((out / "durations.tsv").string(), format_durations(dur, vocab));
  RunConfig cfg = toy_config(opt.spec.sample_rate);
  cfg.include_synthetic = opt.synthetic > 0;
  detail::write_file((out / "config.ini").string(), format_config(cfg));
  log << "wrote " << manifest.size() << " clips to " << out.string() << "\n";
}

}  // namespace sedgl
