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

#include "uqtsc/uq.hpp"

#include <cmath>

#include "uqtsc/error.hpp"

namespace uqtsc {

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorKind::InvalidRate, "rate must lie in [0, 1), got " + std::to_string(rate));
  }
}

namespace {

std::vector<double> sample_mask(std::size_t n, double rate, Rng& rng) {
  std::vector<double> mask(n);
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  for (auto& m : mask) m = rng.uniform() < keep ? scale : 0.0;
  return mask;
}

Rng& require_rng(Context& ctx, const char* who) {
  if (!ctx.rng) throw Error(ErrorKind::InvalidArgument, std::string(who) + ": stochastic mode needs an rng");
  return *ctx.rng;
}

}  // namespace

Tensor mc_dropout_forward(const Tensor& x, double rate, Mode mode, Rng& rng) {
  check_rate(rate);
  if (mode == Mode::Infer || rate == 0.0) return x;
  Tensor y = x;
  const auto mask = sample_mask(x.size(), rate, rng);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  return y;
}

Tensor apply_dropout_mask(const Tensor& x, const std::vector<double>& mask, double rate) {
  check_rate(rate);
  if (mask.size() != x.size()) throw Error(ErrorKind::ShapeMismatch, "dropout mask size");
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i] / (1.0 - rate);
  return y;
}

Tensor dropconnect_dense_forward(const Tensor& x, const Dense& layer, double rate, Mode mode, Rng& rng) {
  check_rate(rate);
  if (mode == Mode::Infer || rate == 0.0) {
    return kernels::dense_forward(x, layer.weight().value, layer.bias().value);
  }
  Tensor w = layer.weight().value;
  const auto mask = sample_mask(w.size(), rate, rng);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= mask[i];
  return kernels::dense_forward(x, w, layer.bias().value);
}

Tensor dropconnect_dense_forward(const Tensor& x, const Dense& layer, double rate,
                                 const std::vector<double>& weight_mask) {
  check_rate(rate);
  Tensor w = layer.weight().value;
  if (weight_mask.size() != w.size()) throw Error(ErrorKind::ShapeMismatch, "dropconnect mask size");
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= weight_mask[i] / (1.0 - rate);
  return kernels::dense_forward(x, w, layer.bias().value);
}

// ---------------------------------------------------------------------------

Dropout::Dropout(double rate) : rate_(rate) { check_rate(rate); }

std::string Dropout::describe() const { return "dropout(" + std::to_string(rate_).substr(0, 4) + ")"; }

Tensor Dropout::forward(const Tensor& x, Context& ctx) {
  if (!ctx.stochastic() || rate_ == 0.0) {
    mask_.clear();
    return x;
  }
  if (!(ctx.freeze_noise && mask_.size() == x.size())) mask_ = sample_mask(x.size(), rate_, require_rng(ctx, "dropout"));
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask_[i];
  return y;
}

Tensor Dropout::backward(const Tensor& dy) {
  if (mask_.empty()) return dy;
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask_[i];
  return dx;
}

DropConnectDense::DropConnectDense(Dense base, double rate) : base_(std::move(base)), rate_(rate) { check_rate(rate); }

std::string DropConnectDense::describe() const { return "dropconnect_" + base_.describe(); }

Tensor DropConnectDense::forward(const Tensor& x, Context& ctx) {
  input_ = x;
  const Tensor& w = base_.weight().value;
  if (!ctx.stochastic() || rate_ == 0.0) {
    mask_.clear();
    return kernels::dense_forward(x, w, base_.bias().value);
  }
  if (!(ctx.freeze_noise && mask_.size() == w.size())) mask_ = sample_mask(w.size(), rate_, require_rng(ctx, "dropconnect"));
  effective_ = w;
  for (std::size_t i = 0; i < w.size(); ++i) effective_[i] *= mask_[i];
  return kernels::dense_forward(x, effective_, base_.bias().value);
}

Tensor DropConnectDense::backward(const Tensor& dy) {
  auto& w = base_.weight();
  if (mask_.empty()) return kernels::dense_backward(input_, w.value, dy, &w.grad, &base_.bias().grad);
  Tensor dw(w.value.shape());
  Tensor dx = kernels::dense_backward(input_, effective_, dy, &dw, &base_.bias().grad);
  for (std::size_t i = 0; i < dw.size(); ++i) w.grad[i] += dw[i] * mask_[i];
  return dx;
}

DropConnectConv1d::DropConnectConv1d(Conv1d base, double rate) : base_(std::move(base)), rate_(rate) { check_rate(rate); }

std::string DropConnectConv1d::describe() const { return "dropconnect_" + base_.describe(); }

Tensor DropConnectConv1d::forward(const Tensor& x, Context& ctx) {
  input_ = x;
  const Tensor& w = base_.weight().value;
  if (!ctx.stochastic() || rate_ == 0.0) {
    mask_.clear();
    return kernels::conv1d_forward(x, w, base_.bias().value, base_.padding());
  }
  if (!(ctx.freeze_noise && mask_.size() == w.size())) mask_ = sample_mask(w.size(), rate_, require_rng(ctx, "dropconnect"));
  effective_ = w;
  for (std::size_t i = 0; i < w.size(); ++i) effective_[i] *= mask_[i];
  return kernels::conv1d_forward(x, effective_, base_.bias().value, base_.padding());
}

Tensor DropConnectConv1d::backward(const Tensor& dy) {
  auto& w = base_.weight();
  if (mask_.empty()) {
    return kernels::conv1d_backward(input_, w.value, dy, base_.padding(), &w.grad, &base_.bias().grad);
  }
  Tensor dw(w.value.shape());
  Tensor dx = kernels::conv1d_backward(input_, effective_, dy, base_.padding(), &dw, &base_.bias().grad);
  for (std::size_t i = 0; i < dw.size(); ++i) w.grad[i] += dw[i] * mask_[i];
  return dx;
}

// ---------------------------------------------------------------------------
// Flipout

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double inverse_softplus(double y) { return std::log(std::expm1(y)); }

}  // namespace

FlipoutDense::FlipoutDense(std::size_t in, std::size_t out, Rng& rng) : FlipoutDense(Dense(in, out, rng)) {}

FlipoutDense::FlipoutDense(const Dense& base, double initial_sigma)
    : mu_w_("mu_weight", base.weight().value),
      rho_w_("rho_weight", Tensor(base.weight().value.shape(), inverse_softplus(initial_sigma))),
      mu_b_("mu_bias", base.bias().value),
      rho_b_("rho_bias", Tensor(base.bias().value.shape(), inverse_softplus(initial_sigma))) {}

std::string FlipoutDense::describe() const {
  return "flipout_dense(" + std::to_string(in_features()) + "->" + std::to_string(out_features()) + ")";
}

Shape FlipoutDense::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != in_features()) {
    throw Error(ErrorKind::ShapeMismatch, describe() + " got input " + shape_string(input));
  }
  return {out_features()};
}

Dense FlipoutDense::mean_layer() const { return Dense(mu_w_.value, mu_b_.value); }

Tensor FlipoutDense::forward(const Tensor& x, Context& ctx) {
  if (x.rank() != 2 || x.dim(1) != in_features()) {
    throw Error(ErrorKind::ShapeMismatch, describe() + " got input " + shape_string(x.shape()));
  }
  input_ = x;
  Tensor y = kernels::dense_forward(x, mu_w_.value, mu_b_.value);
  sampled_ = ctx.stochastic();
  if (!sampled_) return y;

  const auto batch = x.dim(0), in = in_features(), out = out_features();
  if (!(ctx.freeze_noise && sign_in_.rank() == 2 && sign_in_.dim(0) == batch)) {
    Rng& rng = require_rng(ctx, "flipout");
    eps_w_ = Tensor({in, out});
    for (auto& v : eps_w_.values()) v = rng.normal();
    eps_b_ = Tensor({out});
    for (auto& v : eps_b_.values()) v = rng.normal();
    sign_in_ = Tensor({batch, in});
    for (auto& v : sign_in_.values()) v = rng.rademacher();
    sign_out_ = Tensor({batch, out});
    for (auto& v : sign_out_.values()) v = rng.rademacher();
  }
  // delta W = sigma o eps, applied as ((x o r) dW) o s
  Tensor delta({in, out});
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = softplus(rho_w_.value[i]) * eps_w_[i];
  Tensor xr = x;
  for (std::size_t i = 0; i < xr.size(); ++i) xr[i] *= sign_in_[i];
  const Tensor pert = kernels::dense_forward(xr, delta, Tensor({out}));
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t j = 0; j < out; ++j) {
      y.at(n, j) += pert.at(n, j) * sign_out_.at(n, j) + softplus(rho_b_.value[j]) * eps_b_[j];
    }
  }
  return y;
}

Tensor FlipoutDense::backward(const Tensor& dy) {
  Tensor dx = kernels::dense_backward(input_, mu_w_.value, dy, &mu_w_.grad, &mu_b_.grad);
  if (!sampled_) return dx;

  const auto batch = input_.dim(0), in = in_features(), out = out_features();
  Tensor delta({in, out});
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = softplus(rho_w_.value[i]) * eps_w_[i];
  Tensor xr = input_;
  for (std::size_t i = 0; i < xr.size(); ++i) xr[i] *= sign_in_[i];
  Tensor dys = dy;
  for (std::size_t i = 0; i < dys.size(); ++i) dys[i] *= sign_out_[i];

  Tensor ddelta({in, out});
  Tensor dxr = kernels::dense_backward(xr, delta, dys, &ddelta, nullptr);
  for (std::size_t i = 0; i < ddelta.size(); ++i) rho_w_.grad[i] += ddelta[i] * eps_w_[i] * sigmoid(rho_w_.value[i]);
  for (std::size_t j = 0; j < out; ++j) {
    double s = 0.0;
    for (std::size_t n = 0; n < batch; ++n) s += dy.at(n, j);
    rho_b_.grad[j] += s * eps_b_[j] * sigmoid(rho_b_.value[j]);
  }
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dxr[i] * sign_in_[i];
  return dx;
}

double FlipoutDense::kl() const {
  std::vector<double> sw(rho_w_.value.size()), sb(rho_b_.value.size());
  for (std::size_t i = 0; i < sw.size(); ++i) sw[i] = softplus(rho_w_.value[i]);
  for (std::size_t i = 0; i < sb.size(); ++i) sb[i] = softplus(rho_b_.value[i]);
  return gaussian_kl(mu_w_.value.values(), sw) + gaussian_kl(mu_b_.value.values(), sb);
}

void FlipoutDense::add_kl_grad(double weight) {
  auto add = [weight](Parameter& mu, Parameter& rho) {
    for (std::size_t i = 0; i < mu.value.size(); ++i) {
      const double sigma = softplus(rho.value[i]);
      mu.grad[i] += weight * mu.value[i];
      rho.grad[i] += weight * (sigma - 1.0 / sigma) * sigmoid(rho.value[i]);
    }
  };
  add(mu_w_, rho_w_);
  add(mu_b_, rho_b_);
}

double gaussian_kl(std::span<const double> mu, std::span<const double> sigma) {
  if (mu.size() != sigma.size()) throw Error(ErrorKind::ShapeMismatch, "gaussian_kl: mu and sigma sizes differ");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double s = sigma[i];
    if (!(s > 0.0)) throw Error(ErrorKind::NonPositiveSigma, "sigma must be positive");
    kl += -std::log(s) + 0.5 * (s * s + mu[i] * mu[i]) - 0.5;
  }
  return kl;
}

double elbo_loss(double ce_loss, double kl, double kl_weight) {
  if (!(kl_weight > 0.0)) throw Error(ErrorKind::InvalidArgument, "kl_weight must be positive");
  return ce_loss + kl_weight * kl;
}

}  // namespace uqtsc
