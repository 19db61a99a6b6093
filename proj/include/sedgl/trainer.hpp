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

// Weakly supervised training of a single model and teacher/student
// co-training of a fine-resolution student (PS) with a coarse-resolution
// teacher (PT) on labeled plus unlabeled clips.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedgl/checkpoint.hpp"
#include "sedgl/corpus.hpp"
#include "sedgl/features.hpp"
#include "sedgl/inference.hpp"
#include "sedgl/metrics.hpp"
#include "sedgl/model.hpp"

namespace sedgl {

enum class TrainMode { kAtpDf, kGuided };

inline std::string_view to_string(TrainMode m) { return m == TrainMode::kAtpDf ? "atp_df" : "gl"; }

struct GLConfig {
  double gamma = 0.99;
  int start_epoch = 5;
  int batch_size = 64;
  double lr = 0.0018;
  double lr_decay = 0.8;
  int decay_every = 10;
  int patience = 20;
  int max_epochs = 100;
  double alpha = 0.5;

  void validate() const {
    if (!(gamma > 0 && gamma <= 1)) throw ValidationError("gamma must be in (0, 1]");
    if (start_epoch < 0) throw ValidationError("start_epoch must be >= 0");
    if (batch_size < 1 || max_epochs < 1 || patience < 1 || decay_every < 1)
      throw ValidationError("batch size, epochs, patience and decay period must be positive");
    if (!(lr > 0) || !(lr_decay > 0)) throw ValidationError("learning rate settings must be positive");
    if (!(alpha > 0 && alpha < 1)) throw ValidationError("alpha must be in (0, 1)");
  }
};

struct AugmentConfig {
  bool time_shift = true;
  int max_shift = 8;
  bool noise = true;
  double noise_sigma = 0.1;
};

/// Weight of the teacher's pseudo-label loss: 0 up to start_epoch, then
/// 1 - gamma^(epoch - start_epoch).
inline double unsupervised_weight(int epoch, int start_epoch, double gamma) {
  if (epoch <= start_epoch) return 0.0;
  return 1.0 - std::pow(gamma, static_cast<double>(epoch - start_epoch));
}

/// lr * decay^floor((epoch - 1) / decay_every) for 1-based epochs.
inline double learning_rate(int epoch, const GLConfig& cfg) {
  return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>((epoch - 1) / cfg.decay_every));
}

inline constexpr double kLossEps = 1e-7;

/// Binary cross-entropy averaged over classes, on clipped probabilities.
inline double bce(std::span<const double> target, std::span<const double> prob) {
  if (target.size() != prob.size() || target.empty()) throw Error("bce shape mismatch");
  double s = 0;
  for (std::size_t c = 0; c < prob.size(); ++c) {
    const double p = std::clamp(prob[c], kLossEps, 1 - kLossEps);
    s -= target[c] * std::log(p) + (1 - target[c]) * std::log(1 - p);
  }
  return s / static_cast<double>(prob.size());
}

inline std::vector<double> to_double(std::span<const int> v) { return {v.begin(), v.end()}; }

/// Time shift with edge padding: out[t] = in[clamp(t - shift)].
inline FeatureMatrix time_shift(const FeatureMatrix& in, int shift) {
  FeatureMatrix out(in.rows, in.cols);
  out.clip_id = in.clip_id;
  for (int t = 0; t < in.rows; ++t) {
    const int src = std::clamp(t - shift, 0, in.rows - 1);
    std::copy_n(in.values.begin() + static_cast<long>(src) * in.cols, in.cols,
                out.values.begin() + static_cast<long>(t) * in.cols);
  }
  return out;
}

/// Stochastic input perturbation fed to the teacher.
class Augmenter {
 public:
  Augmenter(AugmentConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {}

  FeatureMatrix operator()(const FeatureMatrix& x) {
    FeatureMatrix out = x;
    if (cfg_.time_shift && cfg_.max_shift > 0) {
      std::uniform_int_distribution<int> shift(-cfg_.max_shift, cfg_.max_shift);
      out = time_shift(out, shift(rng_));
    }
    if (cfg_.noise && cfg_.noise_sigma > 0) {
      std::normal_distribution<double> noise(0.0, cfg_.noise_sigma);
      for (auto& v : out.values) v += static_cast<float>(noise(rng_));
    }
    return out;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  AugmentConfig cfg_;
  std::mt19937_64 rng_;
};

struct BatchItem {
  bool labeled = true;
  int index = 0;
};

/// Shuffles L and U independently, interleaves them in proportion to their
/// sizes and cuts the stream into batches of `batch_size`.
inline std::vector<std::vector<BatchItem>> plan_minibatches(int num_labeled, int num_unlabeled,
                                                            int batch_size, std::mt19937_64& rng) {
  std::vector<int> l(num_labeled), u(num_unlabeled);
  std::iota(l.begin(), l.end(), 0);
  std::iota(u.begin(), u.end(), 0);
  std::shuffle(l.begin(), l.end(), rng);
  std::shuffle(u.begin(), u.end(), rng);
  const long long total = static_cast<long long>(num_labeled) + num_unlabeled;
  std::vector<std::vector<BatchItem>> batches;
  std::size_t li = 0, ui = 0;
  for (long long k = 0; k < total; ++k) {
    if (k % batch_size == 0) batches.emplace_back();
    const bool take_l = (k + 1) * num_labeled / total > k * num_labeled / total;
    if (take_l) batches.back().push_back({true, l[li++]});
    else batches.back().push_back({false, u[ui++]});
  }
  return batches;
}

/// Training inputs. Labeled tags are binary vectors in vocabulary order.
struct TrainingData {
  std::vector<FeatureMatrix> labeled;
  std::vector<std::vector<int>> labeled_tags;
  std::vector<FeatureMatrix> unlabeled;
  std::vector<FeatureMatrix> validation;
  std::vector<StrongAnnotation> validation_refs;  // aligned with validation
};

struct StepLosses {
  double supervised_ps = 0, supervised_pt = 0;
  double unsupervised_ps = 0, unsupervised_pt = 0;
  double ps() const { return supervised_ps + unsupervised_ps; }
  double pt() const { return supervised_pt + unsupervised_pt; }
  double total() const { return ps() + pt(); }
};

namespace detail {

inline const FeatureMatrix& item_features(const TrainingData& d, const BatchItem& it) {
  return it.labeled ? d.labeled.at(it.index) : d.unlabeled.at(it.index);
}

}  // namespace detail

/// Supervised gradient for one model over a fully labeled batch; leaves the
/// gradients in the model. Returns the batch-mean loss.
inline double supervised_gradients(Model& model, const std::vector<const FeatureMatrix*>& batch,
                                   const std::vector<std::vector<int>>& tags) {
  if (batch.empty()) throw Error("empty batch");
  const auto probs = model.forward(batch, true);
  const int c = model.config().num_classes;
  const double inv = 1.0 / (static_cast<double>(batch.size()) * c);
  std::vector<float> dlogit(batch.size() * c);
  double loss = 0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto y = to_double(tags[k]);
    loss += bce(y, probs[k].clip_probs);
    for (int j = 0; j < c; ++j)
      dlogit[k * c + j] = static_cast<float>((probs[k].clip_probs[j] - y[j]) * inv);
  }
  model.backward(dlogit);
  return loss / static_cast<double>(batch.size());
}

/// One weakly supervised update of a single model.
inline double supervised_step(Model& model, nn::Adam<float>& opt, const std::vector<const FeatureMatrix*>& batch,
                              const std::vector<std::vector<int>>& tags, double lr) {
  opt.zero_grad();
  const double loss = supervised_gradients(model, batch, tags);
  opt.step(lr);
  return loss;
}

/// Teacher/student gradients for one mixed batch. Labeled clips train both
/// models on their tags; unlabeled clips train the student on the teacher's
/// hard predictions and the teacher, weighted by `a`, on the student's hard
/// predictions. The teacher sees augmented inputs. Gradients are left in
/// the models; losses are normalized by the batch size.
inline StepLosses gl_gradients(const TrainingData& data, const std::vector<BatchItem>& batch, Model& ps,
                               Model& pt, double a, Augmenter& augment, double alpha = 0.5) {
  if (batch.empty()) throw Error("empty batch");
  const int c = ps.config().num_classes;
  if (pt.config().num_classes != c) throw ValidationError("student/teacher class count mismatch");
  std::vector<const FeatureMatrix*> xs;
  std::vector<FeatureMatrix> augmented;
  augmented.reserve(batch.size());
  for (const auto& it : batch) {
    xs.push_back(&detail::item_features(data, it));
    augmented.push_back(augment(*xs.back()));
  }
  std::vector<const FeatureMatrix*> gxs;
  for (const auto& g : augmented) gxs.push_back(&g);

  const auto s = ps.forward(xs, true);
  const auto t = pt.forward(gxs, true);
  const double n = static_cast<double>(batch.size());
  const double inv = 1.0 / (n * c);
  std::vector<float> ds(batch.size() * c), dt(batch.size() * c);
  StepLosses L;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (batch[k].labeled) {
      const auto y = to_double(data.labeled_tags.at(batch[k].index));
      L.supervised_ps += bce(y, s[k].clip_probs) / n;
      L.supervised_pt += bce(y, t[k].clip_probs) / n;
      for (int j = 0; j < c; ++j) {
        ds[k * c + j] = static_cast<float>((s[k].clip_probs[j] - y[j]) * inv);
        dt[k * c + j] = static_cast<float>((t[k].clip_probs[j] - y[j]) * inv);
      }
    } else {
      const auto t_hard = to_double(clip_prediction(t[k].clip_probs, alpha));
      const auto s_hard = to_double(clip_prediction(s[k].clip_probs, alpha));
      L.unsupervised_ps += bce(t_hard, s[k].clip_probs) / n;
      L.unsupervised_pt += a * bce(s_hard, t[k].clip_probs) / n;
      for (int j = 0; j < c; ++j) {
        ds[k * c + j] = static_cast<float>((s[k].clip_probs[j] - t_hard[j]) * inv);
        dt[k * c + j] = static_cast<float>(a * (t[k].clip_probs[j] - s_hard[j]) * inv);
      }
    }
  }
  ps.backward(ds);
  pt.backward(dt);
  return L;
}

inline StepLosses gl_step(const TrainingData& data, const std::vector<BatchItem>& batch, Model& ps, Model& pt,
                          nn::Adam<float>& opt_ps, nn::Adam<float>& opt_pt, double a, Augmenter& augment,
                          double lr, double alpha = 0.5) {
  opt_ps.zero_grad();
  opt_pt.zero_grad();
  const auto losses = gl_gradients(data, batch, ps, pt, a, augment, alpha);
  opt_ps.step(lr);
  opt_pt.step(lr);
  return losses;
}

struct ValidationScores {
  double clip_f1 = 0, event_f1 = 0, segment_f1 = 0;
};

/// Scores a model on strongly labeled clips: tagging F1 on the weakened
/// references plus event- and segment-based F1 of the decoded events.
inline ValidationScores evaluate(Model& model, const std::vector<FeatureMatrix>& clips,
                                 const std::vector<StrongAnnotation>& refs, const EventVocabulary& vocab,
                                 const WindowPlan& plan, double alpha = 0.5,
                                 std::vector<StrongAnnotation>* decoded = nullptr) {
  if (clips.size() != refs.size()) throw ValidationError("validation clips and references differ in size");
  std::vector<const FeatureMatrix*> ptrs;
  for (const auto& c : clips) ptrs.push_back(&c);
  const auto probs = predict(model, ptrs);
  std::vector<std::vector<int>> ref_tags, pred_tags;
  std::vector<StrongAnnotation> preds;
  const auto weak = weaken(refs);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    ref_tags.push_back(to_tags(weak[i], vocab));
    pred_tags.push_back(clip_prediction(probs[i].clip_probs, alpha));
    preds.push_back({refs[i].clip_id, decode_events(probs[i], plan, vocab, alpha)});
  }
  ValidationScores v;
  v.clip_f1 = clip_f1(ref_tags, pred_tags, vocab).macro_f1;
  v.event_f1 = event_based_f1(refs, preds, vocab).macro_f1;
  v.segment_f1 = segment_based_f1(refs, preds, vocab).macro_f1;
  if (decoded) *decoded = std::move(preds);
  return v;
}

struct EpochRecord {
  int epoch = 0;
  double lr = 0, a = 0;
  double loss_ps = 0, loss_pt = 0;
  ValidationScores ps;
  double pt_clip_f1 = 0;
};

inline std::string history_header() {
  return "epoch\tlr\ta\tloss_ps\tloss_pt\tval_clip_f1\tval_event_f1\tval_segment_f1\tpt_val_clip_f1\n";
}

inline std::string format_history_row(const EpochRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d\t%.8g\t%.8g\t%.8f\t%.8f\t%.6f\t%.6f\t%.6f\t%.6f\n", r.epoch, r.lr, r.a,
                r.loss_ps, r.loss_pt, r.ps.clip_f1, r.ps.event_f1, r.ps.segment_f1, r.pt_clip_f1);
  return buf;
}

inline std::string format_history(const std::vector<EpochRecord>& h) {
  std::string s = history_header();
  for (const auto& r : h) s += format_history_row(r);
  return s;
}

inline std::vector<EpochRecord> parse_history(std::string_view text) {
  std::vector<EpochRecord> out;
  const auto rows = detail::lines(text);
  for (std::size_t n = 1; n < rows.size(); ++n) {
    if (detail::trim(rows[n]).empty()) continue;
    const auto f = detail::split(rows[n], '\t');
    if (f.size() != 9) throw ParseError("bad history row", n + 1);
    EpochRecord r;
    double v[9];
    for (int i = 0; i < 9; ++i)
      if (!detail::parse_double(f[i], v[i])) throw ParseError("bad history value", n + 1);
    r.epoch = static_cast<int>(v[0]);
    r.lr = v[1];
    r.a = v[2];
    r.loss_ps = v[3];
    r.loss_pt = v[4];
    r.ps = {v[5], v[6], v[7]};
    r.pt_clip_f1 = v[8];
    out.push_back(r);
  }
  return out;
}

struct TrainerSetup {
  TrainMode mode = TrainMode::kGuided;
  ModelConfig ps;
  std::optional<ModelConfig> pt;  // required for guided mode
  GLConfig gl;
  AugmentConfig augment;
  WindowPlan windows;
  EventVocabulary vocab;
  std::uint64_t seed = 1;
};

/// Owns the models, optimizers, random streams and early-stopping state of
/// one training run. Epochs are 1-based.
class Trainer {
 public:
  Trainer(const TrainingData& data, TrainerSetup setup)
      : data_(data), setup_(std::move(setup)),
        shuffle_rng_(setup_.seed * 0x9E3779B97F4A7C15ULL + 1),
        augment_(setup_.augment, setup_.seed * 0x9E3779B97F4A7C15ULL + 2) {
    setup_.gl.validate();
    if (data_.labeled.empty()) throw Error("empty training set");
    if (data_.labeled.size() != data_.labeled_tags.size())
      throw ValidationError("labeled features and tags differ in size");
    ps_ = std::make_unique<Model>(setup_.ps);
    ps_->init(setup_.seed);
    opt_ps_ = std::make_unique<nn::Adam<float>>(ps_->params());
    if (setup_.mode == TrainMode::kGuided) {
      if (!setup_.pt) throw ValidationError("guided learning needs a teacher configuration");
      if (setup_.ps.encoder.total_time_pool() >= setup_.pt->encoder.total_time_pool())
        throw ValidationError("the teacher must pool time more coarsely than the student");
      pt_ = std::make_unique<Model>(*setup_.pt);
      pt_->init(setup_.seed + 0x5151);
      opt_pt_ = std::make_unique<nn::Adam<float>>(pt_->params());
    }
  }

  int epoch() const { return epoch_; }
  bool finished() const { return finished_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  int best_epoch() const { return best_epoch_; }
  Model& ps() { return *ps_; }
  Model* pt() { return pt_.get(); }
  Model& best_ps() { return best_ps_ ? *best_ps_ : *ps_; }
  Model* best_pt() { return best_pt_ ? best_pt_.get() : pt_.get(); }
  const EpochRecord* best_record() const {
    for (const auto& r : history_)
      if (r.epoch == best_epoch_) return &r;
    return nullptr;
  }

  /// Runs one epoch and the validation pass; returns the epoch record.
  EpochRecord run_epoch() {
    if (finished_) throw Error("training already finished");
    const int e = ++epoch_;
    EpochRecord rec;
    rec.epoch = e;
    rec.lr = learning_rate(e, setup_.gl);
    const bool guided = setup_.mode == TrainMode::kGuided;
    rec.a = guided ? unsupervised_weight(e, setup_.gl.start_epoch, setup_.gl.gamma) : 0.0;
    const int nl = static_cast<int>(data_.labeled.size());
    const int nu = guided ? static_cast<int>(data_.unlabeled.size()) : 0;
    const auto batches = plan_minibatches(nl, nu, setup_.gl.batch_size, shuffle_rng_);
    for (const auto& b : batches) {
      if (guided) {
        const auto L = gl_step(data_, b, *ps_, *pt_, *opt_ps_, *opt_pt_, rec.a, augment_, rec.lr,
                               setup_.gl.alpha);
        rec.loss_ps += L.ps();
        rec.loss_pt += L.pt();
      } else {
        std::vector<const FeatureMatrix*> xs;
        std::vector<std::vector<int>> tags;
        for (const auto& it : b) {
          xs.push_back(&data_.labeled[it.index]);
          tags.push_back(data_.labeled_tags[it.index]);
        }
        rec.loss_ps += supervised_step(*ps_, *opt_ps_, xs, tags, rec.lr);
      }
    }
    rec.loss_ps /= static_cast<double>(batches.size());
    rec.loss_pt /= static_cast<double>(batches.size());
    if (!data_.validation.empty()) {
      rec.ps = evaluate(*ps_, data_.validation, data_.validation_refs, setup_.vocab, setup_.windows,
                        setup_.gl.alpha);
      if (guided)
        rec.pt_clip_f1 = evaluate(*pt_, data_.validation, data_.validation_refs, setup_.vocab, setup_.windows,
                                  setup_.gl.alpha)
                             .clip_f1;
    }
    history_.push_back(rec);
    if (best_epoch_ == 0 || rec.ps.clip_f1 > best_clip_f1_) {
      best_clip_f1_ = rec.ps.clip_f1;
      best_epoch_ = e;
      best_ps_ = std::make_unique<Model>(*ps_);
      if (pt_) best_pt_ = std::make_unique<Model>(*pt_);
      improved_ = true;
    } else {
      improved_ = false;
    }
    if (e - best_epoch_ >= setup_.gl.patience || e >= setup_.gl.max_epochs) finished_ = true;
    return rec;
  }

  /// True when the last epoch set a new best validation clip-level F1.
  bool improved() const { return improved_; }

  void fit(const std::function<void(Trainer&, const EpochRecord&)>& on_epoch = {}) {
    while (!finished_) {
      const auto rec = run_epoch();
      if (on_epoch) on_epoch(*this, rec);
    }
  }

  // Resumable state: models, optimizer moments, random streams, history.
  std::string encode_state() {
    nlohmann::json j;
    j["epoch"] = epoch_;
    j["finished"] = finished_;
    j["best_epoch"] = best_epoch_;
    j["best_clip_f1"] = best_clip_f1_;
    j["history"] = format_history(history_);
    std::ostringstream r1, r2;
    r1 << shuffle_rng_;
    r2 << augment_.rng();
    j["shuffle_rng"] = r1.str();
    j["augment_rng"] = r2.str();
    j["opt_ps_steps"] = opt_ps_->steps();
    if (opt_pt_) j["opt_pt_steps"] = opt_pt_->steps();
    std::string blobs;
    auto put = [&](const std::string& s) {
      detail::append_raw<std::uint64_t>(blobs, s.size());
      blobs += s;
    };
    const EventVocabulary& v = setup_.vocab;
    put(encode_checkpoint(*ps_, v, 0));
    put(encode_checkpoint(best_ps(), v, 0));
    put(encode_moments(*opt_ps_));
    if (pt_) {
      put(encode_checkpoint(*pt_, v, 0));
      put(encode_checkpoint(*best_pt(), v, 0));
      put(encode_moments(*opt_pt_));
    }
    const std::string h = j.dump();
    std::string out = "SGST";
    detail::append_raw<std::uint64_t>(out, h.size());
    return out + h + blobs;
  }

  void decode_state(const std::string& bytes) {
    if (bytes.size() < 12 || bytes.compare(0, 4, "SGST") != 0) throw ParseError("not a trainer state");
    std::uint64_t hl;
    std::memcpy(&hl, bytes.data() + 4, 8);
    const auto j = nlohmann::json::parse(bytes.substr(12, hl));
    std::size_t pos = 12 + hl;
    auto take = [&]() {
      if (pos + 8 > bytes.size()) throw ParseError("truncated trainer state");
      std::uint64_t n;
      std::memcpy(&n, bytes.data() + pos, 8);
      pos += 8;
      if (pos + n > bytes.size()) throw ParseError("truncated trainer state");
      auto s = bytes.substr(pos, n);
      pos += n;
      return s;
    };
    epoch_ = j.at("epoch").get<int>();
    finished_ = j.at("finished").get<bool>();
    best_epoch_ = j.at("best_epoch").get<int>();
    best_clip_f1_ = j.at("best_clip_f1").get<double>();
    history_ = parse_history(j.at("history").get<std::string>());
    std::istringstream r1(j.at("shuffle_rng").get<std::string>()), r2(j.at("augment_rng").get<std::string>());
    r1 >> shuffle_rng_;
    r2 >> augment_.rng();
    load_into(*ps_, take());
    best_ps_ = std::make_unique<Model>(decode_checkpoint(take()).model);
    decode_moments(*opt_ps_, take(), j.at("opt_ps_steps").get<long long>());
    if (pt_) {
      load_into(*pt_, take());
      best_pt_ = std::make_unique<Model>(decode_checkpoint(take()).model);
      decode_moments(*opt_pt_, take(), j.at("opt_pt_steps").get<long long>());
    }
  }

 private:
  static void load_into(Model& m, const std::string& bytes) {
    auto loaded = decode_checkpoint(bytes);
    auto src = loaded.model.params();
    auto dst = m.params();
    for (std::size_t i = 0; i < dst.size(); ++i) std::copy(src[i].value.begin(), src[i].value.end(), dst[i].value.begin());
    auto sb = loaded.model.buffers();
    auto db = m.buffers();
    for (std::size_t i = 0; i < db.size(); ++i) std::copy(sb[i].value.begin(), sb[i].value.end(), db[i].value.begin());
  }

  static std::string encode_moments(nn::Adam<float>& opt) {
    std::string s;
    for (auto* set : {&opt.first_moments(), &opt.second_moments()})
      for (const auto& v : *set) s.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    return s;
  }

  static void decode_moments(nn::Adam<float>& opt, const std::string& s, long long steps) {
    std::size_t pos = 0;
    for (auto* set : {&opt.first_moments(), &opt.second_moments()})
      for (auto& v : *set) {
        const std::size_t n = v.size() * sizeof(double);
        if (pos + n > s.size()) throw ParseError("optimizer state size mismatch");
        std::memcpy(v.data(), s.data() + pos, n);
        pos += n;
      }
    if (pos != s.size()) throw ParseError("optimizer state size mismatch");
    opt.set_steps(steps);
  }

  const TrainingData& data_;
  TrainerSetup setup_;
  std::unique_ptr<Model> ps_, pt_, best_ps_, best_pt_;
  std::unique_ptr<nn::Adam<float>> opt_ps_, opt_pt_;
  std::mt19937_64 shuffle_rng_;
  Augmenter augment_;
  std::vector<EpochRecord> history_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  double best_clip_f1_ = -1;
  bool finished_ = false;
  bool improved_ = false;
};

}  // namespace sedgl
