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

#pragma once

#include <span>
#include <vector>

#include "uqtsc/layers.hpp"

namespace uqtsc {

/// Inverted dropout: survivors scaled by 1/(1-p) so the off mode needs no rescaling.
/// Active in Train and McInfer; identity in Infer.
Tensor mc_dropout_forward(const Tensor& x, double rate, Mode mode, Rng& rng);
/// Applies a fixed {0,1} mask with inverted scaling.
Tensor apply_dropout_mask(const Tensor& x, const std::vector<double>& mask, double rate);

/// Dense layer whose weights (never the bias) are Bernoulli-masked per call.
Tensor dropconnect_dense_forward(const Tensor& x, const Dense& layer, double rate, Mode mode, Rng& rng);
Tensor dropconnect_dense_forward(const Tensor& x, const Dense& layer, double rate,
                                 const std::vector<double>& weight_mask);

void check_rate(double rate);

class Dropout : public Layer {
 public:
  explicit Dropout(double rate);

  LayerKind kind() const override { return LayerKind::Dropout; }
  std::string describe() const override;
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  LayerPtr clone() const override { return std::make_unique<Dropout>(*this); }
  bool stochastic() const override { return rate_ > 0.0; }
  double rate() const { return rate_; }

 private:
  double rate_;
  std::vector<double> mask_;  // already scaled by 1/(1-p); empty when inactive
};

class DropConnectDense : public Layer {
 public:
  DropConnectDense(Dense base, double rate);

  LayerKind kind() const override { return LayerKind::DropConnectDense; }
  std::string describe() const override;
  Shape output_shape(const Shape& input) const override { return base_.output_shape(input); }
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override { return base_.parameters(); }
  LayerPtr clone() const override { return std::make_unique<DropConnectDense>(*this); }
  bool stochastic() const override { return rate_ > 0.0; }

  const Dense& base() const { return base_; }
  double rate() const { return rate_; }

 private:
  Dense base_;
  double rate_;
  std::vector<double> mask_;  // scaled weight mask; empty when inactive
  Tensor input_, effective_;
};

class DropConnectConv1d : public Layer {
 public:
  DropConnectConv1d(Conv1d base, double rate);

  LayerKind kind() const override { return LayerKind::DropConnectConv1d; }
  std::string describe() const override;
  Shape output_shape(const Shape& input) const override { return base_.output_shape(input); }
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override { return base_.parameters(); }
  LayerPtr clone() const override { return std::make_unique<DropConnectConv1d>(*this); }
  bool stochastic() const override { return rate_ > 0.0; }

  const Conv1d& base() const { return base_; }
  double rate() const { return rate_; }

 private:
  Conv1d base_;
  double rate_;
  std::vector<double> mask_;
  Tensor input_, effective_;
};

double softplus(double x);

/// Mean-field Gaussian dense layer trained by the reparameterisation trick with
/// Flipout sign perturbations: one shared noise draw per call, decorrelated
/// across batch rows by per-example Rademacher sign vectors.
class FlipoutDense : public Layer {
 public:
  static constexpr double kInitialSigma = 0.05;

  FlipoutDense(std::size_t in, std::size_t out, Rng& rng);
  /// Posterior means taken from an existing dense layer.
  explicit FlipoutDense(const Dense& base, double initial_sigma = kInitialSigma);

  LayerKind kind() const override { return LayerKind::FlipoutDense; }
  std::string describe() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override { return {&mu_w_, &rho_w_, &mu_b_, &rho_b_}; }
  LayerPtr clone() const override { return std::make_unique<FlipoutDense>(*this); }
  bool stochastic() const override { return true; }
  double kl() const override;
  void add_kl_grad(double weight) override;

  std::size_t in_features() const { return mu_w_.value.dim(0); }
  std::size_t out_features() const { return mu_w_.value.dim(1); }
  Parameter& mu_weight() { return mu_w_; }
  Parameter& rho_weight() { return rho_w_; }
  Parameter& mu_bias() { return mu_b_; }
  Parameter& rho_bias() { return rho_b_; }
  /// Deterministic layer with the posterior means.
  Dense mean_layer() const;

 private:
  Parameter mu_w_, rho_w_, mu_b_, rho_b_;
  Tensor input_;
  // per-call noise
  Tensor eps_w_, eps_b_, sign_in_, sign_out_;
  bool sampled_ = false;
};

/// Sum over elements of KL(N(mu, sigma^2) || N(0, 1)).
double gaussian_kl(std::span<const double> mu, std::span<const double> sigma);

/// Negative ELBO per batch: cross-entropy plus weighted KL.
double elbo_loss(double ce_loss, double kl, double kl_weight);

}  // namespace uqtsc
