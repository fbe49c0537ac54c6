// Copyright 2026 The uqtsc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "uqtsc/error.hpp"
#include "uqtsc/layers.hpp"

namespace uqtsc {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::BatchNorm1d: return "batchnorm1d";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::GlobalAvgPool: return "globalavgpool";
    case LayerKind::Relu: return "relu";
    case LayerKind::Lstm: return "lstm";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::Transpose: return "transpose";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::DropConnectDense: return "dropconnect_dense";
    case LayerKind::DropConnectConv1d: return "dropconnect_conv1d";
    case LayerKind::FlipoutDense: return "flipout_dense";
    case LayerKind::Residual: return "residual";
  }
  return "?";
}

std::string Layer::describe() const { return to_string(kind()); }

Parameter::Parameter(std::string n, Tensor init, bool train)
    : name(std::move(n)), value(std::move(init)), trainable(train) {
  if (trainable) {
    grad = Tensor(value.shape());
    m = Tensor(value.shape());
    v = Tensor(value.shape());
  }
}

Tensor fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(3.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

namespace {

void require_rank(const Tensor& x, std::size_t rank, const char* what) {
  if (x.rank() != rank) {
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": expected rank " + std::to_string(rank) +
                                              " input, got " + shape_string(x.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// kernels

namespace kernels {

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 2, "dense");
  if (w.rank() != 2 || x.dim(1) != w.dim(0) || b.size() != w.dim(1)) {
    throw Error(ErrorKind::ShapeMismatch, "dense: input " + shape_string(x.shape()) + " vs weight " +
                                              shape_string(w.shape()));
  }
  const auto batch = x.dim(0), in = w.dim(0), out = w.dim(1);
  Tensor y({batch, out});
  MatMap ym(y.data(), batch, out);
  ym.noalias() = ConstMatMap(x.data(), batch, in) * ConstMatMap(w.data(), in, out);
  ym.rowwise() += ConstVecMap(b.data(), out).transpose();
  return y;
}

Tensor dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dw, Tensor* db) {
  const auto batch = x.dim(0), in = w.dim(0), out = w.dim(1);
  ConstMatMap dym(dy.data(), batch, out);
  ConstMatMap xm(x.data(), batch, in);
  if (dw) MatMap(dw->data(), in, out).noalias() += xm.transpose() * dym;
  if (db) VecMap(db->data(), out) += dym.colwise().sum().transpose();
  Tensor dx({batch, in});
  MatMap(dx.data(), batch, in).noalias() = dym * ConstMatMap(w.data(), in, out).transpose();
  return dx;
}

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, Padding padding) {
  if (padding == Padding::Same) return length;
  if (kernel > length) {
    throw Error(ErrorKind::KernelTooLarge, "kernel " + std::to_string(kernel) + " exceeds length " +
                                               std::to_string(length));
  }
  return length - kernel + 1;
}

namespace {

std::size_t left_pad(std::size_t kernel, Padding padding) {
  return padding == Padding::Same ? (kernel - 1) / 2 : 0;
}

// cols[(c*k + j), t] = x[c, t + j - pad], zero outside the input.
void im2col(const double* x, std::size_t channels, std::size_t length, std::size_t kernel, std::size_t pad,
            std::size_t out_len, RowMatrix& cols) {
  cols.setZero(static_cast<Eigen::Index>(channels * kernel), static_cast<Eigen::Index>(out_len));
  for (std::size_t c = 0; c < channels; ++c) {
    const double* row = x + c * length;
    for (std::size_t j = 0; j < kernel; ++j) {
      double* dst = cols.data() + (c * kernel + j) * out_len;
      // valid t: 0 <= t + j - pad < length
      const long lo = std::max<long>(0, static_cast<long>(pad) - static_cast<long>(j));
      const long hi = std::min<long>(static_cast<long>(out_len),
                                     static_cast<long>(length) + static_cast<long>(pad) - static_cast<long>(j));
      if (hi > lo) std::copy(row + lo + j - pad, row + hi + j - pad, dst + lo);
    }
  }
}

void col2im(const RowMatrix& cols, std::size_t channels, std::size_t length, std::size_t kernel, std::size_t pad,
            std::size_t out_len, double* dx) {
  for (std::size_t c = 0; c < channels; ++c) {
    double* row = dx + c * length;
    for (std::size_t j = 0; j < kernel; ++j) {
      const double* src = cols.data() + (c * kernel + j) * out_len;
      const long lo = std::max<long>(0, static_cast<long>(pad) - static_cast<long>(j));
      const long hi = std::min<long>(static_cast<long>(out_len),
                                     static_cast<long>(length) + static_cast<long>(pad) - static_cast<long>(j));
      for (long t = lo; t < hi; ++t) row[t + static_cast<long>(j) - static_cast<long>(pad)] += src[t];
    }
  }
}

void check_conv_shapes(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 3, "conv1d");
  if (w.rank() != 3 || x.dim(1) != w.dim(1) || b.size() != w.dim(0)) {
    throw Error(ErrorKind::ShapeMismatch, "conv1d: input " + shape_string(x.shape()) + " vs weight " +
                                              shape_string(w.shape()));
  }
}

}  // namespace

Tensor conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Padding padding) {
  check_conv_shapes(x, w, b);
  const auto batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
  const auto filters = w.dim(0), kernel = w.dim(2);
  const auto out_len = conv1d_output_length(length, kernel, padding);
  const auto pad = left_pad(kernel, padding);
  Tensor y({batch, filters, out_len});
  ConstMatMap wm(w.data(), filters, channels * kernel);
  const ConstVecMap bias(b.data(), filters);
  RowMatrix cols;
  for (std::size_t n = 0; n < batch; ++n) {
    im2col(x.data() + n * channels * length, channels, length, kernel, pad, out_len, cols);
    MatMap yn(y.data() + n * filters * out_len, filters, out_len);
    yn.noalias() = wm * cols;
    yn.colwise() += bias;
  }
  return y;
}

Tensor conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Padding padding, Tensor* dw,
                       Tensor* db) {
  const auto batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
  const auto filters = w.dim(0), kernel = w.dim(2);
  const auto out_len = conv1d_output_length(length, kernel, padding);
  const auto pad = left_pad(kernel, padding);
  Tensor dx({batch, channels, length});
  ConstMatMap wm(w.data(), filters, channels * kernel);
  RowMatrix cols, dcols;
  for (std::size_t n = 0; n < batch; ++n) {
    ConstMatMap dyn(dy.data() + n * filters * out_len, filters, out_len);
    if (dw) {
      im2col(x.data() + n * channels * length, channels, length, kernel, pad, out_len, cols);
      MatMap(dw->data(), filters, channels * kernel).noalias() += dyn * cols.transpose();
    }
    if (db) VecMap(db->data(), filters) += dyn.rowwise().sum();
    dcols.noalias() = wm.transpose() * dyn;
    col2im(dcols, channels, length, kernel, pad, out_len, dx.data() + n * channels * length);
  }
  return dx;
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::size_t in, std::size_t out, Rng& rng)
    : weight_("weight", fan_in_uniform({in, out}, in, rng)), bias_("bias", Tensor({out})) {}

Dense::Dense(Tensor weight, Tensor bias) : weight_("weight", std::move(weight)), bias_("bias", std::move(bias)) {}

std::string Dense::describe() const {
  return "dense(" + std::to_string(in_features()) + "->" + std::to_string(out_features()) + ")";
}

Shape Dense::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != in_features()) {
    throw Error(ErrorKind::ShapeMismatch, describe() + " got input " + shape_string(input));
  }
  return {out_features()};
}

Tensor Dense::forward(const Tensor& x, Context&) {
  input_ = x;
  return kernels::dense_forward(x, weight_.value, bias_.value);
}

Tensor Dense::backward(const Tensor& dy) {
  return kernels::dense_backward(input_, weight_.value, dy, &weight_.grad, &bias_.grad);
}

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(std::size_t in_channels, std::size_t filters, std::size_t kernel, Padding padding, Rng& rng)
    : weight_("weight", fan_in_uniform({filters, in_channels, kernel}, in_channels * kernel, rng)),
      bias_("bias", Tensor({filters})),
      padding_(padding) {}

Conv1d::Conv1d(Tensor weight, Tensor bias, Padding padding)
    : weight_("weight", std::move(weight)), bias_("bias", std::move(bias)), padding_(padding) {}

std::string Conv1d::describe() const {
  return "conv1d(" + std::to_string(in_channels()) + "->" + std::to_string(filters()) + ", k=" +
         std::to_string(kernel()) + (padding_ == Padding::Same ? ", same)" : ", valid)");
}

Shape Conv1d::output_shape(const Shape& input) const {
  if (input.size() != 2 || input[0] != in_channels()) {
    throw Error(ErrorKind::ShapeMismatch, describe() + " got input " + shape_string(input));
  }
  return {filters(), kernels::conv1d_output_length(input[1], kernel(), padding_)};
}

Tensor Conv1d::forward(const Tensor& x, Context&) {
  input_ = x;
  return kernels::conv1d_forward(x, weight_.value, bias_.value, padding_);
}

Tensor Conv1d::backward(const Tensor& dy) {
  return kernels::conv1d_backward(input_, weight_.value, dy, padding_, &weight_.grad, &bias_.grad);
}

// ---------------------------------------------------------------------------
// BatchNorm1d

BatchNorm1d::BatchNorm1d(std::size_t channels)
    : gamma_("gamma", Tensor({channels}, 1.0)),
      beta_("beta", Tensor({channels}, 0.0)),
      running_mean_("running_mean", Tensor({channels}, 0.0), false),
      running_var_("running_var", Tensor({channels}, 1.0), false) {}

std::string BatchNorm1d::describe() const { return "batchnorm1d(" + std::to_string(gamma_.value.size()) + ")"; }

Tensor BatchNorm1d::forward(const Tensor& x, Context& ctx) {
  if (x.rank() != 2 && x.rank() != 3) throw Error(ErrorKind::ShapeMismatch, "batchnorm1d: rank 2 or 3 input required");
  const auto batch = x.dim(0), channels = x.dim(1);
  const std::size_t len = x.rank() == 3 ? x.dim(2) : 1;
  if (channels != gamma_.value.size()) throw Error(ErrorKind::ShapeMismatch, describe() + " got " + shape_string(x.shape()));
  batch_stats_ = ctx.mode == Mode::Train;
  if (batch_stats_ && batch < 2) throw Error(ErrorKind::BatchTooSmall, "batchnorm1d training needs batch >= 2");

  std::vector<double> mean(channels), var(channels);
  if (batch_stats_) {
    const double count = static_cast<double>(batch * len);
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* p = x.data() + (n * channels + c) * len;
        for (std::size_t t = 0; t < len; ++t) s += p[t];
      }
      mean[c] = s / count;
      double ss = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* p = x.data() + (n * channels + c) * len;
        for (std::size_t t = 0; t < len; ++t) ss += (p[t] - mean[c]) * (p[t] - mean[c]);
      }
      var[c] = ss / count;
      running_mean_.value[c] = kMomentum * running_mean_.value[c] + (1.0 - kMomentum) * mean[c];
      running_var_.value[c] = kMomentum * running_var_.value[c] + (1.0 - kMomentum) * var[c];
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = running_mean_.value[c];
      var[c] = running_var_.value[c];
    }
  }

  inv_std_.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) inv_std_[c] = 1.0 / std::sqrt(var[c] + kEpsilon);
  xhat_ = Tensor(x.shape());
  Tensor y(x.shape());
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t off = (n * channels + c) * len;
      for (std::size_t t = 0; t < len; ++t) {
        const double h = (x[off + t] - mean[c]) * inv_std_[c];
        xhat_[off + t] = h;
        y[off + t] = gamma_.value[c] * h + beta_.value[c];
      }
    }
  }
  return y;
}

Tensor BatchNorm1d::backward(const Tensor& dy) {
  const auto batch = dy.dim(0), channels = dy.dim(1);
  const std::size_t len = dy.rank() == 3 ? dy.dim(2) : 1;
  const double count = static_cast<double>(batch * len);
  Tensor dx(dy.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels + c) * len;
      for (std::size_t t = 0; t < len; ++t) {
        sum_dy += dy[off + t];
        sum_dy_xhat += dy[off + t] * xhat_[off + t];
      }
    }
    gamma_.grad[c] += sum_dy_xhat;
    beta_.grad[c] += sum_dy;
    const double g = gamma_.value[c] * inv_std_[c];
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels + c) * len;
      for (std::size_t t = 0; t < len; ++t) {
        dx[off + t] = batch_stats_ ? g * (dy[off + t] - sum_dy / count - xhat_[off + t] * sum_dy_xhat / count)
                                   : g * dy[off + t];
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// MaxPool1d, GlobalAvgPool, Relu, Transpose

MaxPool1d::MaxPool1d(std::size_t pool) : pool_(pool) {
  if (pool_ < 1) throw Error(ErrorKind::InvalidArgument, "pool size must be >= 1");
}

std::string MaxPool1d::describe() const { return "maxpool1d(" + std::to_string(pool_) + ")"; }

Shape MaxPool1d::output_shape(const Shape& input) const { return {input.at(0), input.at(1) / pool_}; }

Tensor MaxPool1d::forward(const Tensor& x, Context&) {
  require_rank(x, 3, "maxpool1d");
  const auto batch = x.dim(0), channels = x.dim(1), len = x.dim(2);
  const auto out_len = len / pool_;
  input_shape_ = x.shape();
  Tensor y({batch, channels, out_len});
  argmax_.assign(y.size(), 0);
  for (std::size_t row = 0; row < batch * channels; ++row) {
    const double* src = x.data() + row * len;
    for (std::size_t t = 0; t < out_len; ++t) {
      std::size_t best = t * pool_;
      for (std::size_t j = 1; j < pool_; ++j) {
        if (src[t * pool_ + j] > src[best]) best = t * pool_ + j;
      }
      y[row * out_len + t] = src[best];
      argmax_[row * out_len + t] = row * len + best;
    }
  }
  return y;
}

Tensor MaxPool1d::backward(const Tensor& dy) {
  Tensor dx(input_shape_);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax_[i]] += dy[i];
  return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, Context&) {
  require_rank(x, 3, "globalavgpool");
  const auto batch = x.dim(0), channels = x.dim(1), len = x.dim(2);
  if (len == 0) throw Error(ErrorKind::ShapeMismatch, "globalavgpool: empty time axis");
  input_shape_ = x.shape();
  Tensor y({batch, channels});
  for (std::size_t row = 0; row < batch * channels; ++row) {
    double s = 0.0;
    for (std::size_t t = 0; t < len; ++t) s += x[row * len + t];
    y[row] = s / static_cast<double>(len);
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
  Tensor dx(input_shape_);
  const auto len = input_shape_[2];
  const double scale = 1.0 / static_cast<double>(len);
  for (std::size_t row = 0; row < dy.size(); ++row) {
    for (std::size_t t = 0; t < len; ++t) dx[row * len + t] = dy[row] * scale;
  }
  return dx;
}

Tensor Relu::forward(const Tensor& x, Context&) {
  output_ = x;
  for (auto& v : output_.values()) v = v > 0.0 ? v : 0.0;
  return output_;
}

Tensor Relu::backward(const Tensor& dy) {
  Tensor dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = output_[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

namespace {

Tensor swap_last_axes(const Tensor& x) {
  require_rank(x, 3, "transpose");
  const auto batch = x.dim(0), a = x.dim(1), b = x.dim(2);
  Tensor y({batch, b, a});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) y[(n * b + j) * a + i] = x[(n * a + i) * b + j];
    }
  }
  return y;
}

}  // namespace

Tensor Transpose::forward(const Tensor& x, Context&) { return swap_last_axes(x); }
Tensor Transpose::backward(const Tensor& dy) { return swap_last_axes(dy); }

// ---------------------------------------------------------------------------
// Residual

Residual::Residual(std::vector<LayerPtr> main, std::vector<LayerPtr> shortcut)
    : main_(std::move(main)), shortcut_(std::move(shortcut)) {}

Residual::Residual(const Residual& other) : Layer(other), relu_(other.relu_) {
  for (const auto& l : other.main_) main_.push_back(l->clone());
  for (const auto& l : other.shortcut_) shortcut_.push_back(l->clone());
}

std::string Residual::describe() const {
  std::string out = "residual[";
  for (std::size_t i = 0; i < main_.size(); ++i) out += (i ? ", " : "") + main_[i]->describe();
  out += " | ";
  if (shortcut_.empty()) out += "identity";
  for (std::size_t i = 0; i < shortcut_.size(); ++i) out += (i ? ", " : "") + shortcut_[i]->describe();
  return out + "]";
}

Shape Residual::output_shape(const Shape& input) const {
  Shape a = input, b = input;
  for (const auto& l : main_) a = l->output_shape(a);
  for (const auto& l : shortcut_) b = l->output_shape(b);
  if (a != b) throw Error(ErrorKind::ShapeMismatch, "residual paths disagree: " + shape_string(a) + " vs " + shape_string(b));
  return a;
}

Tensor Residual::forward(const Tensor& x, Context& ctx) {
  Tensor a = x;
  for (auto& l : main_) a = l->forward(a, ctx);
  Tensor b = x;
  for (auto& l : shortcut_) b = l->forward(b, ctx);
  if (!a.same_shape(b)) throw Error(ErrorKind::ShapeMismatch, "residual paths disagree");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return relu_.forward(a, ctx);
}

Tensor Residual::backward(const Tensor& dy) {
  const Tensor dsum = relu_.backward(dy);
  Tensor da = dsum;
  for (auto it = main_.rbegin(); it != main_.rend(); ++it) da = (*it)->backward(da);
  Tensor db = dsum;
  for (auto it = shortcut_.rbegin(); it != shortcut_.rend(); ++it) db = (*it)->backward(db);
  for (std::size_t i = 0; i < da.size(); ++i) da[i] += db[i];
  return da;
}

std::vector<Parameter*> Residual::parameters() {
  std::vector<Parameter*> out;
  for (auto* l : children()) {
    auto p = l->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Layer*> Residual::children() {
  std::vector<Layer*> out;
  for (auto& l : main_) out.push_back(l.get());
  for (auto& l : shortcut_) out.push_back(l.get());
  return out;
}

bool Residual::stochastic() const {
  for (const auto& l : main_) if (l->stochastic()) return true;
  for (const auto& l : shortcut_) if (l->stochastic()) return true;
  return false;
}

double Residual::kl() const {
  double s = 0.0;
  for (const auto& l : main_) s += l->kl();
  for (const auto& l : shortcut_) s += l->kl();
  return s;
}

void Residual::add_kl_grad(double weight) {
  for (auto& l : main_) l->add_kl_grad(weight);
  for (auto& l : shortcut_) l->add_kl_grad(weight);
}

}  // namespace uqtsc
