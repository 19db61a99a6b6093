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

// CNN encoder + embedding-level attention pooling + per-class classifiers.
//
// The encoder maps a (frames x mels) log-mel grid to T' frames of
// d-dimensional features. For every class c the attention head scores each
// frame with z_ct = w_c . x_t + b_c on the class's feature subspace (first
// k_c coordinates), pools the frames with softmax(z_c / d), and a sigmoid
// classifier turns the pooled vector into the clip probability. The frame
// probability for class c is sigmoid(z_ct).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sedgl/common.hpp"
#include "sedgl/disentangled.hpp"
#include "sedgl/features.hpp"
#include "sedgl/nn.hpp"

namespace sedgl {

enum class Variant { kPS, kPT };

inline std::string_view to_string(Variant v) { return v == Variant::kPS ? "PS" : "PT"; }

/// Leading batch norm, then three [conv, batch norm, ReLU, max pool] blocks.
struct EncoderConfig {
  Variant variant = Variant::kPS;
  int input_frames = 500;
  int n_mels = 64;
  std::vector<int> channels = {64, 128, 160};
  std::vector<int> kernels = {3, 3, 3};
  std::vector<int> time_pool = {1, 1, 1};
  std::vector<int> freq_pool = {4, 4, 4};

  static EncoderConfig ps(int n_mels = 64, int frames = 500) {
    EncoderConfig c;
    c.variant = Variant::kPS;
    c.n_mels = n_mels;
    c.input_frames = frames;
    return c;
  }
  static EncoderConfig pt(int n_mels = 64, int frames = 500) {
    EncoderConfig c;
    c.variant = Variant::kPT;
    c.n_mels = n_mels;
    c.input_frames = frames;
    c.channels = {48, 64, 160};
    c.time_pool = {4, 4, 4};
    return c;
  }

  int stages() const { return static_cast<int>(channels.size()); }
  int output_frames() const {
    int t = input_frames;
    for (int p : time_pool) t /= p;
    return t;
  }
  int output_freq() const {
    int f = n_mels;
    for (int p : freq_pool) f /= p;
    return f;
  }
  int output_dim() const { return channels.back() * output_freq(); }
  int total_time_pool() const {
    int t = 1;
    for (int p : time_pool) t *= p;
    return t;
  }

  void validate() const {
    if (stages() != 3 || kernels.size() != 3 || time_pool.size() != 3 || freq_pool.size() != 3)
      throw ValidationError("encoder needs exactly 3 blocks");
    for (int i = 0; i < 3; ++i) {
      if (channels[i] < 1 || kernels[i] < 1 || kernels[i] % 2 == 0 || time_pool[i] < 1 ||
          freq_pool[i] < 1)
        throw ValidationError("invalid encoder block " + std::to_string(i));
    }
    if (input_frames < 1 || n_mels < 1) throw ValidationError("invalid encoder input size");
    if (output_frames() < 1 || output_freq() < 1)
      throw ValidationError("pooling reduces the input to nothing");
  }

  std::string describe() const {
    auto list = [](const std::vector<int>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s;
    };
    return std::string(to_string(variant)) + " frames=" + std::to_string(input_frames) +
           " mels=" + std::to_string(n_mels) + " channels=" + list(channels) +
           " kernels=" + list(kernels) + " time_pool=" + list(time_pool) +
           " freq_pool=" + list(freq_pool);
  }
};

/// Outputs of one forward pass for one clip. Row-major: frame_probs is
/// frames x classes, attention is classes x frames, contextual is
/// classes x dim.
struct ProbabilitySet {
  std::string clip_id;
  int frames = 0;
  int classes = 0;
  int dim = 0;
  std::vector<double> clip_probs;
  std::vector<double> frame_probs;
  std::vector<double> attention;
  std::vector<double> contextual;

  double frame(int t, int c) const { return frame_probs[static_cast<std::size_t>(t) * classes + c]; }
  double attn(int c, int t) const { return attention[static_cast<std::size_t>(c) * frames + t]; }
};

template <typename T>
inline T sigmoid(T x) {
  return x >= 0 ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

/// Attention pooling and classifier heads for C classes over d-dim frames.
template <typename T>
class AttentionHeads {
 public:
  struct Cache {
    int frames = 0;
    std::vector<T> x;          // frames x d (input)
    std::vector<T> z;          // classes x frames
    std::vector<T> a;          // classes x frames
    std::vector<T> h;          // classes x d
    std::vector<T> logit;      // classes
  };

  AttentionHeads() = default;
  AttentionHeads(int classes, const DFAssignment& df)
      : classes_(classes), dim_(df.d), masks_(make_masks(df)),
        w_(static_cast<std::size_t>(classes) * df.d, T(0)), b_(classes, T(0)),
        u_(w_.size(), T(0)), v_(classes, T(0)),
        gw_(w_.size(), T(0)), gb_(classes, T(0)), gu_(w_.size(), T(0)), gv_(classes, T(0)) {
    if (static_cast<int>(masks_.size()) != classes)
      throw ValidationError("DF assignment class count mismatch");
  }

  int classes() const { return classes_; }
  int dim() const { return dim_; }
  std::size_t num_params() const { return w_.size() + b_.size() + u_.size() + v_.size(); }
  const std::vector<std::vector<std::uint8_t>>& masks() const { return masks_; }

  template <typename Rng>
  void init(Rng& rng) {
    const double limit = std::sqrt(6.0 / (dim_ + 1));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& x : w_) x = static_cast<T>(dist(rng));
    for (auto& x : u_) x = static_cast<T>(dist(rng));
    std::fill(b_.begin(), b_.end(), T(0));
    std::fill(v_.begin(), v_.end(), T(0));
  }

  /// x is frames x d row-major.
  void forward(std::span<const T> x, int frames, ProbabilitySet& out, Cache* cache) const {
    if (x.size() != static_cast<std::size_t>(frames) * dim_)
      throw ValidationError("attention input dimension mismatch");
    out.frames = frames;
    out.classes = classes_;
    out.dim = dim_;
    out.clip_probs.assign(classes_, 0.0);
    out.frame_probs.assign(static_cast<std::size_t>(frames) * classes_, 0.0);
    out.attention.assign(static_cast<std::size_t>(classes_) * frames, 0.0);
    out.contextual.assign(static_cast<std::size_t>(classes_) * dim_, 0.0);
    Cache local;
    Cache& cc = cache ? *cache : local;
    cc.frames = frames;
    cc.x.assign(x.begin(), x.end());
    cc.z.assign(static_cast<std::size_t>(classes_) * frames, T(0));
    cc.a.assign(cc.z.size(), T(0));
    cc.h.assign(static_cast<std::size_t>(classes_) * dim_, T(0));
    cc.logit.assign(classes_, T(0));
    const T inv_d = T(1) / static_cast<T>(dim_);
    for (int c = 0; c < classes_; ++c) {
      const int k = active(c);
      const T* w = &w_[static_cast<std::size_t>(c) * dim_];
      T* z = &cc.z[static_cast<std::size_t>(c) * frames];
      T* a = &cc.a[static_cast<std::size_t>(c) * frames];
      T zmax = -std::numeric_limits<T>::infinity();
      for (int t = 0; t < frames; ++t) {
        const T* xt = &x[static_cast<std::size_t>(t) * dim_];
        T s = b_[c];
        for (int j = 0; j < k; ++j) s += w[j] * xt[j];
        z[t] = s;
        zmax = std::max(zmax, s);
      }
      T denom = 0;
      for (int t = 0; t < frames; ++t) {
        a[t] = std::exp((z[t] - zmax) * inv_d);
        denom += a[t];
      }
      T* h = &cc.h[static_cast<std::size_t>(c) * dim_];
      for (int t = 0; t < frames; ++t) {
        a[t] /= denom;
        const T* xt = &x[static_cast<std::size_t>(t) * dim_];
        for (int j = 0; j < k; ++j) h[j] += a[t] * xt[j];
        out.attention[static_cast<std::size_t>(c) * frames + t] = a[t];
        out.frame_probs[static_cast<std::size_t>(t) * classes_ + c] = sigmoid(z[t]);
      }
      const T* u = &u_[static_cast<std::size_t>(c) * dim_];
      T l = v_[c];
      for (int j = 0; j < k; ++j) l += u[j] * h[j];
      cc.logit[c] = l;
      out.clip_probs[c] = sigmoid(l);
      for (int j = 0; j < dim_; ++j) out.contextual[static_cast<std::size_t>(c) * dim_ + j] = h[j];
    }
  }

  /// Accumulates parameter gradients and writes dL/dx (frames x d) given
  /// dL/dlogit per class and, optionally, dL/dz per (frame, class).
  void backward(const Cache& cc, std::span<const T> dlogit, std::span<const T> dframe_logit,
                std::span<T> dx) {
    const int frames = cc.frames;
    std::fill(dx.begin(), dx.end(), T(0));
    const T inv_d = T(1) / static_cast<T>(dim_);
    std::vector<T> da(frames), dz(frames), dh(dim_);
    for (int c = 0; c < classes_; ++c) {
      const int k = active(c);
      const std::size_t co = static_cast<std::size_t>(c) * dim_;
      const T* u = &u_[co];
      const T* w = &w_[co];
      const T* h = &cc.h[co];
      const T* a = &cc.a[static_cast<std::size_t>(c) * frames];
      const T g = dlogit[c];
      gv_[c] += g;
      for (int j = 0; j < k; ++j) {
        gu_[co + j] += g * h[j];
        dh[j] = g * u[j];
      }
      T weighted = 0;
      for (int t = 0; t < frames; ++t) {
        const T* xt = &cc.x[static_cast<std::size_t>(t) * dim_];
        T s = 0;
        for (int j = 0; j < k; ++j) s += dh[j] * xt[j];
        da[t] = s;
        weighted += a[t] * s;
      }
      for (int t = 0; t < frames; ++t) {
        dz[t] = a[t] * (da[t] - weighted) * inv_d;
        if (!dframe_logit.empty()) dz[t] += dframe_logit[static_cast<std::size_t>(t) * classes_ + c];
      }
      for (int t = 0; t < frames; ++t) {
        const T* xt = &cc.x[static_cast<std::size_t>(t) * dim_];
        T* dxt = &dx[static_cast<std::size_t>(t) * dim_];
        gb_[c] += dz[t];
        for (int j = 0; j < k; ++j) {
          gw_[co + j] += dz[t] * xt[j];
          dxt[j] += a[t] * dh[j] + dz[t] * w[j];
        }
      }
    }
  }

  void collect(std::vector<nn::ParamRef<T>>& out) {
    out.push_back({"head.attention.weight", w_, gw_});
    out.push_back({"head.attention.bias", b_, gb_});
    out.push_back({"head.classifier.weight", u_, gu_});
    out.push_back({"head.classifier.bias", v_, gv_});
  }

  std::vector<T>& attention_weight() { return w_; }
  std::vector<T>& attention_bias() { return b_; }
  std::vector<T>& classifier_weight() { return u_; }
  std::vector<T>& classifier_bias() { return v_; }

 private:
  int active(int c) const {
    int k = 0;
    while (k < dim_ && masks_[c][k]) ++k;
    return k;
  }

  int classes_ = 0, dim_ = 0;
  std::vector<std::vector<std::uint8_t>> masks_;
  std::vector<T> w_, b_, u_, v_, gw_, gb_, gu_, gv_;
};

struct ModelConfig {
  EncoderConfig encoder;
  int num_classes = 10;
  DFAssignment df;

  void validate() const {
    encoder.validate();
    if (num_classes < 1) throw ValidationError("need at least one class");
    if (df.d != encoder.output_dim())
      throw ValidationError("DF dimension " + std::to_string(df.d) +
                            " does not match encoder output " +
                            std::to_string(encoder.output_dim()));
    if (static_cast<int>(df.k.size()) != num_classes)
      throw ValidationError("DF assignment class count mismatch");
  }
};

template <typename T>
class SedModel {
 public:
  SedModel() = default;
  explicit SedModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto& e = cfg_.encoder;
    input_bn_ = nn::BatchNorm<T>(e.n_mels, 3);
    int cin = 1;
    for (int b = 0; b < 3; ++b) {
      conv_[b] = nn::Conv2d<T>(cin, e.channels[b], e.kernels[b], e.kernels[b]);
      bn_[b] = nn::BatchNorm<T>(e.channels[b], 1);
      pool_[b] = nn::MaxPool<T>(e.time_pool[b], e.freq_pool[b]);
      cin = e.channels[b];
    }
    heads_ = AttentionHeads<T>(cfg_.num_classes, cfg_.df);
  }

  const ModelConfig& config() const { return cfg_; }

  template <typename Rng>
  void init(Rng& rng) {
    for (auto& c : conv_) c.init(rng);
    heads_.init(rng);
  }
  void init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    init(rng);
  }

  std::vector<nn::ParamRef<T>> params() {
    std::vector<nn::ParamRef<T>> out;
    input_bn_.collect("encoder.input_bn", out);
    for (int b = 0; b < 3; ++b) {
      conv_[b].collect("encoder.block" + std::to_string(b) + ".conv", out);
      bn_[b].collect("encoder.block" + std::to_string(b) + ".bn", out);
    }
    heads_.collect(out);
    return out;
  }

  std::vector<nn::BufferRef<T>> buffers() {
    std::vector<nn::BufferRef<T>> out;
    input_bn_.collect_buffers("encoder.input_bn", out);
    for (int b = 0; b < 3; ++b) bn_[b].collect_buffers("encoder.block" + std::to_string(b) + ".bn", out);
    return out;
  }

  std::size_t num_params() {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.value.size();
    return n;
  }

  AttentionHeads<T>& heads() { return heads_; }

  /// Runs the encoder. `x` is [N, 1, frames, mels]. Output is [N, T', d].
  void encode(const nn::Tensor<T>& x, nn::Tensor<T>& out, bool training) {
    const auto& e = cfg_.encoder;
    if (x.c != 1 || x.h != e.input_frames || x.w != e.n_mels)
      throw ValidationError("encoder input must be " + std::to_string(e.input_frames) + "x" +
                            std::to_string(e.n_mels));
    training_ = training;
    nn::Tensor<T> cur, tmp;
    input_bn_.forward(x, cur, training);
    for (int b = 0; b < 3; ++b) {
      conv_[b].forward(cur, tmp);
      if (training) block_in_[b] = std::move(cur);
      bn_[b].forward(tmp, cur, training);
      nn::relu_inplace(cur);
      pool_[b].forward(cur, tmp, training);
      if (training) relu_out_[b] = std::move(cur);
      cur = std::move(tmp);
    }
    const int tp = cur.h, fp = cur.w, ch = cur.c, d = ch * fp;
    out.resize(cur.n, 1, tp, d);
    for (int i = 0; i < cur.n; ++i)
      for (int c = 0; c < ch; ++c)
        for (int t = 0; t < tp; ++t)
          for (int f = 0; f < fp; ++f) out.at(i, 0, t, c * fp + f) = cur.at(i, c, t, f);
    enc_shape_ = {cur.n, ch, tp, fp};
  }

  /// Backward through the encoder given dL/d(encoder output) as [N, T', d].
  void encode_backward(const nn::Tensor<T>& dout) {
    if (!training_) throw Error("backward requires a training-mode forward pass");
    const auto [n, ch, tp, fp] = enc_shape_;
    nn::Tensor<T> grad(n, ch, tp, fp), tmp;
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < ch; ++c)
        for (int t = 0; t < tp; ++t)
          for (int f = 0; f < fp; ++f) grad.at(i, c, t, f) = dout.at(i, 0, t, c * fp + f);
    for (int b = 2; b >= 0; --b) {
      pool_[b].backward(grad, tmp);
      const auto& r = relu_out_[b].data;
      for (std::size_t k = 0; k < tmp.size(); ++k)
        if (!(r[k] > T(0))) tmp.data[k] = T(0);
      bn_[b].backward(tmp, grad);
      conv_[b].backward(block_in_[b], grad, &tmp);
      grad = std::move(tmp);
    }
    input_bn_.backward(grad, tmp);
    release();
  }

  /// Forward for a batch of clips. When training, caches are kept for a
  /// following backward() call.
  std::vector<ProbabilitySet> forward(const std::vector<const FeatureMatrix*>& batch, bool training) {
    if (batch.empty()) throw Error("empty batch");
    const auto& e = cfg_.encoder;
    nn::Tensor<T> x(static_cast<int>(batch.size()), 1, e.input_frames, e.n_mels);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& f = *batch[i];
      if (f.rows != e.input_frames || f.cols != e.n_mels)
        throw ValidationError("feature shape " + std::to_string(f.rows) + "x" +
                              std::to_string(f.cols) + " does not match the model input");
      std::copy(f.values.begin(), f.values.end(), x.sample(static_cast<int>(i)));
    }
    return forward_tensor(x, training, &batch);
  }

  std::vector<ProbabilitySet> forward_tensor(const nn::Tensor<T>& x, bool training,
                                             const std::vector<const FeatureMatrix*>* ids = nullptr) {
    nn::Tensor<T> enc;
    encode(x, enc, training);
    const int tp = enc.h, d = enc.w;
    std::vector<ProbabilitySet> out(x.n);
    if (training) caches_.assign(x.n, {});
    for (int i = 0; i < x.n; ++i) {
      heads_.forward(std::span<const T>(enc.sample(i), static_cast<std::size_t>(tp) * d), tp,
                     out[i], training ? &caches_[i] : nullptr);
      if (ids) out[i].clip_id = (*ids)[i]->clip_id;
    }
    return out;
  }

  /// dlogit is N x C (loss gradient w.r.t. clip logits); dframe is optional
  /// N x (T' x C) w.r.t. frame logits.
  void backward(std::span<const T> dlogit, std::span<const T> dframe = {}) {
    const int n = static_cast<int>(caches_.size());
    const int c = heads_.classes(), d = heads_.dim();
    if (n == 0) throw Error("backward without cached forward");
    const int tp = caches_[0].frames;
    nn::Tensor<T> denc(n, 1, tp, d);
    const std::size_t fsz = static_cast<std::size_t>(tp) * c;
    for (int i = 0; i < n; ++i) {
      heads_.backward(caches_[i], dlogit.subspan(static_cast<std::size_t>(i) * c, c),
                      dframe.empty() ? std::span<const T>() : dframe.subspan(i * fsz, fsz),
                      std::span<T>(denc.sample(i), static_cast<std::size_t>(tp) * d));
    }
    encode_backward(denc);
  }

  void release() {
    caches_.clear();
    for (int b = 0; b < 3; ++b) {
      block_in_[b] = {};
      relu_out_[b] = {};
      bn_[b].release();
      pool_[b].release();
    }
    input_bn_.release();
  }

 private:
  ModelConfig cfg_;
  nn::BatchNorm<T> input_bn_;
  std::array<nn::Conv2d<T>, 3> conv_;
  std::array<nn::BatchNorm<T>, 3> bn_;
  std::array<nn::MaxPool<T>, 3> pool_;
  AttentionHeads<T> heads_;

  bool training_ = false;
  std::array<nn::Tensor<T>, 3> block_in_, relu_out_;
  std::array<int, 4> enc_shape_{};
  std::vector<typename AttentionHeads<T>::Cache> caches_;
};

using Model = SedModel<float>;

template <typename T>
std::size_t count_parameters(SedModel<T>& m) {
  return m.num_params();
}

/// 1 where clip_probs[c] >= alpha.
inline std::vector<int> clip_prediction(std::span<const double> clip_probs, double alpha = 0.5) {
  std::vector<int> out(clip_probs.size());
  for (std::size_t c = 0; c < clip_probs.size(); ++c) out[c] = clip_probs[c] >= alpha ? 1 : 0;
  return out;
}

/// 1 where frame_probs[t][c] * clip_pred[c] >= alpha (frames x classes).
inline std::vector<int> frame_prediction(std::span<const double> frame_probs,
                                         std::span<const int> clip_pred, double alpha = 0.5) {
  const std::size_t c = clip_pred.size();
  if (c == 0 || frame_probs.size() % c != 0) throw ValidationError("frame/clip shape mismatch");
  std::vector<int> out(frame_probs.size());
  for (std::size_t i = 0; i < frame_probs.size(); ++i)
    out[i] = frame_probs[i] * clip_pred[i % c] >= alpha ? 1 : 0;
  return out;
}

}  // namespace sedgl
