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

// Minimal CPU layers with hand-written backward passes. Activations use the
// NCHW layout where H is time and W is frequency.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sedgl/common.hpp"

namespace sedgl::nn {

// Eigen's vectorised kernels peel loops by address, so buffers are aligned to
// keep results independent of where the allocator places them.
template <typename T>
using AlignedVec = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  AlignedVec<T> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  void resize(int n_, int c_, int h_, int w_) {
    n = n_; c = c_; h = h_; w = w_;
    data.assign(static_cast<std::size_t>(n) * c * h * w, T(0));
  }
  std::size_t size() const { return data.size(); }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  T* sample(int i) { return data.data() + i * sample_size(); }
  const T* sample(int i) const { return data.data() + i * sample_size(); }
  T& at(int i, int ch, int y, int x) {
    return data[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
  }
  T at(int i, int ch, int y, int x) const {
    return data[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
  }
};

/// Named view of a trainable tensor and its gradient accumulator.
template <typename T>
struct ParamRef {
  std::string name;
  std::span<T> value;
  std::span<T> grad;
};

/// Non-trainable state that still belongs in a checkpoint.
template <typename T>
struct BufferRef {
  std::string name;
  std::span<T> value;
};

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

/// 2-D convolution with odd kernels and "same" zero padding.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int cin, int cout, int kh, int kw) : cin_(cin), cout_(cout), kh_(kh), kw_(kw) {
    if (kh % 2 == 0 || kw % 2 == 0) throw ValidationError("kernel sizes must be odd");
    weight_.assign(static_cast<std::size_t>(cout) * patch(), T(0));
    bias_.assign(cout, T(0));
    gweight_.assign(weight_.size(), T(0));
    gbias_.assign(cout, T(0));
  }

  int patch() const { return cin_ * kh_ * kw_; }
  int out_channels() const { return cout_; }
  std::size_t num_params() const { return weight_.size() + bias_.size(); }

  template <typename Rng>
  void init(Rng& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / patch()));
    for (auto& v : weight_) v = static_cast<T>(dist(rng));
    std::fill(bias_.begin(), bias_.end(), T(0));
  }

  void forward(const Tensor<T>& x, Tensor<T>& y) {
    if (x.c != cin_) throw ValidationError("conv input channel mismatch");
    y.resize(x.n, cout_, x.h, x.w);
    const int hw = x.h * x.w;
    col_.resize(static_cast<std::size_t>(patch()) * hw);
    ConstMatMap<T> W(weight_.data(), cout_, patch());
    for (int i = 0; i < x.n; ++i) {
      im2col(x.sample(i), x.h, x.w);
      MatMap<T> Y(y.sample(i), cout_, hw);
      Y.noalias() = W * ConstMatMap<T>(col_.data(), patch(), hw);
      for (int o = 0; o < cout_; ++o) Y.row(o).array() += bias_[o];
    }
  }

  /// Accumulates weight gradients; writes the input gradient when dx != null.
  void backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx) {
    const int hw = x.h * x.w;
    col_.resize(static_cast<std::size_t>(patch()) * hw);
    dcol_.resize(col_.size());
    ConstMatMap<T> W(weight_.data(), cout_, patch());
    MatMap<T> GW(gweight_.data(), cout_, patch());
    if (dx) dx->resize(x.n, x.c, x.h, x.w);
    for (int i = 0; i < x.n; ++i) {
      im2col(x.sample(i), x.h, x.w);
      ConstMatMap<T> DY(dy.sample(i), cout_, hw);
      GW.noalias() += DY * ConstMatMap<T>(col_.data(), patch(), hw).transpose();
      for (int o = 0; o < cout_; ++o) gbias_[o] += DY.row(o).sum();
      if (dx) {
        MatMap<T>(dcol_.data(), patch(), hw).noalias() = W.transpose() * DY;
        col2im(dx->sample(i), x.h, x.w);
      }
    }
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", weight_, gweight_});
    out.push_back({prefix + ".bias", bias_, gbias_});
  }

  AlignedVec<T>& weight() { return weight_; }
  AlignedVec<T>& bias() { return bias_; }

 private:
  void im2col(const T* src, int h, int w) {
    const int ph = kh_ / 2, pw = kw_ / 2;
    T* dst = col_.data();
    for (int ci = 0; ci < cin_; ++ci) {
      const T* plane = src + static_cast<std::size_t>(ci) * h * w;
      for (int ki = 0; ki < kh_; ++ki) {
        for (int kj = 0; kj < kw_; ++kj) {
          const int dxo = kj - pw;
          for (int y = 0; y < h; ++y) {
            const int sy = y + ki - ph;
            T* row = dst + static_cast<std::size_t>(y) * w;
            if (sy < 0 || sy >= h) {
              std::fill(row, row + w, T(0));
              continue;
            }
            const T* srow = plane + static_cast<std::size_t>(sy) * w;
            const int x0 = std::max(0, -dxo), x1 = std::min(w, w - dxo);
            for (int x = 0; x < x0; ++x) row[x] = T(0);
            std::copy(srow + x0 + dxo, srow + x1 + dxo, row + x0);
            for (int x = x1; x < w; ++x) row[x] = T(0);
          }
          dst += static_cast<std::size_t>(h) * w;
        }
      }
    }
  }

  void col2im(T* dst, int h, int w) const {
    const int ph = kh_ / 2, pw = kw_ / 2;
    std::fill(dst, dst + static_cast<std::size_t>(cin_) * h * w, T(0));
    const T* src = dcol_.data();
    for (int ci = 0; ci < cin_; ++ci) {
      T* plane = dst + static_cast<std::size_t>(ci) * h * w;
      for (int ki = 0; ki < kh_; ++ki) {
        for (int kj = 0; kj < kw_; ++kj) {
          const int dxo = kj - pw;
          for (int y = 0; y < h; ++y) {
            const int sy = y + ki - ph;
            if (sy < 0 || sy >= h) continue;
            const T* row = src + static_cast<std::size_t>(y) * w;
            T* drow = plane + static_cast<std::size_t>(sy) * w;
            const int x0 = std::max(0, -dxo), x1 = std::min(w, w - dxo);
            for (int x = x0; x < x1; ++x) drow[x + dxo] += row[x];
          }
          src += static_cast<std::size_t>(h) * w;
        }
      }
    }
  }

  int cin_ = 0, cout_ = 0, kh_ = 3, kw_ = 3;
  AlignedVec<T> weight_, bias_, gweight_, gbias_;
  AlignedVec<T> col_, dcol_;
};

/// Batch normalization over one axis of an NCHW tensor: axis 1 normalizes
/// per channel, axis 3 per frequency bin (used on the raw log-mel input).
template <typename T>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(int features, int axis, double momentum = 0.1, double eps = 1e-5)
      : features_(features), axis_(axis), momentum_(momentum), eps_(eps),
        gamma_(features, T(1)), beta_(features, T(0)),
        ggamma_(features, T(0)), gbeta_(features, T(0)),
        running_mean_(features, T(0)), running_var_(features, T(1)) {
    if (axis != 1 && axis != 3) throw ValidationError("batch norm axis must be 1 or 3");
  }

  std::size_t num_params() const { return gamma_.size() + beta_.size(); }

  void forward(const Tensor<T>& x, Tensor<T>& y, bool training) {
    check(x);
    y.resize(x.n, x.c, x.h, x.w);
    std::vector<double> mean(features_, 0.0), var(features_, 0.0);
    if (training) {
      const double count = static_cast<double>(x.size()) / features_;
      for_each(x, [&](std::size_t idx, int f) { mean[f] += x.data[idx]; });
      for (auto& m : mean) m /= count;
      for_each(x, [&](std::size_t idx, int f) {
        const double d = x.data[idx] - mean[f];
        var[f] += d * d;
      });
      for (auto& v : var) v /= count;
      inv_std_.assign(features_, T(0));
      for (int f = 0; f < features_; ++f) {
        inv_std_[f] = static_cast<T>(1.0 / std::sqrt(var[f] + eps_));
        const double unbiased = count > 1 ? var[f] * count / (count - 1) : var[f];
        running_mean_[f] = static_cast<T>((1 - momentum_) * running_mean_[f] + momentum_ * mean[f]);
        running_var_[f] = static_cast<T>((1 - momentum_) * running_var_[f] + momentum_ * unbiased);
      }
      xhat_.resize(x.n, x.c, x.h, x.w);
      for_each(x, [&](std::size_t idx, int f) {
        const T xh = static_cast<T>((x.data[idx] - mean[f]) * inv_std_[f]);
        xhat_.data[idx] = xh;
        y.data[idx] = gamma_[f] * xh + beta_[f];
      });
    } else {
      AlignedVec<T> scale(features_), shift(features_);
      for (int f = 0; f < features_; ++f) {
        scale[f] = static_cast<T>(gamma_[f] / std::sqrt(static_cast<double>(running_var_[f]) + eps_));
        shift[f] = beta_[f] - scale[f] * running_mean_[f];
      }
      for_each(x, [&](std::size_t idx, int f) { y.data[idx] = scale[f] * x.data[idx] + shift[f]; });
    }
  }

  /// Valid after a training-mode forward.
  void backward(const Tensor<T>& dy, Tensor<T>& dx) {
    dx.resize(dy.n, dy.c, dy.h, dy.w);
    const double count = static_cast<double>(dy.size()) / features_;
    std::vector<double> sum_dy(features_, 0.0), sum_dy_xhat(features_, 0.0);
    for_each(dy, [&](std::size_t idx, int f) {
      sum_dy[f] += dy.data[idx];
      sum_dy_xhat[f] += static_cast<double>(dy.data[idx]) * xhat_.data[idx];
    });
    for (int f = 0; f < features_; ++f) {
      ggamma_[f] += static_cast<T>(sum_dy_xhat[f]);
      gbeta_[f] += static_cast<T>(sum_dy[f]);
    }
    for_each(dy, [&](std::size_t idx, int f) {
      const double g = gamma_[f] * inv_std_[f] / count;
      dx.data[idx] = static_cast<T>(
          g * (count * dy.data[idx] - sum_dy[f] - xhat_.data[idx] * sum_dy_xhat[f]));
    });
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".gamma", gamma_, ggamma_});
    out.push_back({prefix + ".beta", beta_, gbeta_});
  }
  void collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out) {
    out.push_back({prefix + ".running_mean", running_mean_});
    out.push_back({prefix + ".running_var", running_var_});
  }

  void release() { xhat_ = Tensor<T>(); }

 private:
  void check(const Tensor<T>& x) const {
    if ((axis_ == 1 ? x.c : x.w) != features_)
      throw ValidationError("batch norm feature size mismatch");
  }

  template <typename F>
  void for_each(const Tensor<T>& x, F&& fn) const {
    std::size_t idx = 0;
    for (int i = 0; i < x.n; ++i)
      for (int ch = 0; ch < x.c; ++ch)
        for (int y = 0; y < x.h; ++y)
          for (int w = 0; w < x.w; ++w, ++idx) fn(idx, axis_ == 1 ? ch : w);
  }

  int features_ = 0, axis_ = 1;
  double momentum_ = 0.1, eps_ = 1e-5;
  AlignedVec<T> gamma_, beta_, ggamma_, gbeta_, running_mean_, running_var_;
  AlignedVec<T> inv_std_;
  Tensor<T> xhat_;
};

template <typename T>
inline void relu_inplace(Tensor<T>& x) {
  for (auto& v : x.data) v = std::max(v, T(0));
}

/// Non-overlapping max pooling; trailing rows/columns that do not fill a
/// whole window are dropped.
template <typename T>
class MaxPool {
 public:
  MaxPool() = default;
  MaxPool(int ph, int pw) : ph_(ph), pw_(pw) {
    if (ph < 1 || pw < 1) throw ValidationError("pool sizes must be positive");
  }

  static int out_size(int in, int pool) { return in / pool; }

  void forward(const Tensor<T>& x, Tensor<T>& y, bool keep_argmax) {
    const int oh = out_size(x.h, ph_), ow = out_size(x.w, pw_);
    if (oh < 1 || ow < 1) throw ValidationError("pooling reduces a dimension to zero");
    y.resize(x.n, x.c, oh, ow);
    if (keep_argmax) argmax_.assign(y.size(), 0);
    in_shape_ = {x.n, x.c, x.h, x.w};
    std::size_t o = 0;
    for (int i = 0; i < x.n; ++i)
      for (int ch = 0; ch < x.c; ++ch) {
        const std::size_t base = (static_cast<std::size_t>(i) * x.c + ch) * x.h * x.w;
        for (int yy = 0; yy < oh; ++yy)
          for (int xx = 0; xx < ow; ++xx, ++o) {
            T best = -std::numeric_limits<T>::infinity();
            std::size_t arg = 0;
            for (int a = 0; a < ph_; ++a)
              for (int b = 0; b < pw_; ++b) {
                const std::size_t idx = base + static_cast<std::size_t>(yy * ph_ + a) * x.w + xx * pw_ + b;
                if (x.data[idx] > best) { best = x.data[idx]; arg = idx; }
              }
            y.data[o] = best;
            if (keep_argmax) argmax_[o] = arg;
          }
      }
  }

  void backward(const Tensor<T>& dy, Tensor<T>& dx) const {
    dx.resize(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    for (std::size_t o = 0; o < dy.size(); ++o) dx.data[argmax_[o]] += dy.data[o];
  }

  void release() { argmax_.clear(); argmax_.shrink_to_fit(); }

 private:
  int ph_ = 1, pw_ = 1;
  std::array<int, 4> in_shape_{};
  std::vector<std::size_t> argmax_;
};

/// Adam with per-tensor first/second moment buffers.
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<ParamRef<T>> params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
      m_.emplace_back(p.value.size(), 0.0);
      v_.emplace_back(p.value.size(), 0.0);
    }
  }

  void zero_grad() {
    for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = beta1_ * m[i] + (1 - beta1_) * g;
        v[i] = beta2_ * v[i] + (1 - beta2_) * g * g;
        const double mh = m[i] / c1, vh = v[i] / c2;
        p.value[i] = static_cast<T>(p.value[i] - lr * mh / (std::sqrt(vh) + eps_));
      }
    }
  }

  long long steps() const { return t_; }
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  void set_steps(long long t) { t_ = t; }

 private:
  std::vector<ParamRef<T>> params_;
  double beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace sedgl::nn
