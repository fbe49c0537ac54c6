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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "uqtsc/rng.hpp"
#include "uqtsc/tensor.hpp"

namespace uqtsc {

/// Train: batch statistics, stochastic layers active.
/// Infer: running statistics, stochastic layers off (deterministic).
/// McInfer: running statistics, stochastic layers active (Monte Carlo sampling).
enum class Mode { Train, Infer, McInfer };

struct Context {
  Mode mode = Mode::Infer;
  Rng* rng = nullptr;
  /// Reuse the noise drawn by the previous forward pass (gradient checks).
  bool freeze_noise = false;

  bool stochastic() const noexcept { return mode != Mode::Infer; }
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor init, bool train = true);
  void zero_grad() { grad.fill(0.0); }
};

enum class LayerKind {
  Dense,
  Conv1d,
  BatchNorm1d,
  MaxPool1d,
  GlobalAvgPool,
  Relu,
  Lstm,
  Softmax,
  Transpose,
  Dropout,
  DropConnectDense,
  DropConnectConv1d,
  FlipoutDense,
  Residual,
};

const char* to_string(LayerKind kind);

enum class Padding { Same, Valid };

/// Sizes of a single layer; which fields matter depends on `kind`.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t in = 0;      // input features / channels
  std::size_t out = 0;     // output features / filters / LSTM cells
  std::size_t kernel = 0;  // conv kernel
  std::size_t pool = 0;    // max-pool size
  std::size_t length = 0;  // time steps (grad checks)
  bool return_sequences = false;
  Padding padding = Padding::Same;
  double rate = 0.0;       // dropout / dropconnect rate
};

/// A differentiable layer. forward() caches what backward() needs; parameter
/// gradients accumulate until Parameter::zero_grad().
/// Shapes exclude nothing: inputs always carry the batch as their first axis.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::string describe() const;
  /// Output shape for a single example (batch axis omitted).
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual Tensor forward(const Tensor& x, Context& ctx) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;

  /// True for layers that inject Monte Carlo noise.
  virtual bool stochastic() const { return false; }
  /// KL(q || prior) for variational layers.
  virtual double kl() const { return 0.0; }
  virtual void add_kl_grad(double /*weight*/) {}
  /// Nested layers (residual blocks).
  virtual std::vector<Layer*> children() { return {}; }
};

using LayerPtr = std::unique_ptr<Layer>;

// Stateless kernels shared by deterministic and weight-noise layers.
namespace kernels {

/// y = x W + b; x [batch x in], W [in x out], b [out].
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);
/// Accumulates into dw/db (may be empty to skip) and returns dx.
Tensor dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dw, Tensor* db);

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, Padding padding);
/// x [batch x in x len], w [filters x in x kernel], b [filters].
Tensor conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Padding padding);
Tensor conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Padding padding, Tensor* dw,
                       Tensor* db);

}  // namespace kernels

/// Fan-in scaled uniform initialisation, limit sqrt(3 / fan_in).
Tensor fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng);

class Dense : public Layer {
 public:
  Dense(std::size_t in, std::size_t out, Rng& rng);
  Dense(Tensor weight, Tensor bias);

  LayerKind kind() const override { return LayerKind::Dense; }
  std::string describe() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  LayerPtr clone() const override { return std::make_unique<Dense>(*this); }

  std::size_t in_features() const { return weight_.value.dim(0); }
  std::size_t out_features() const { return weight_.value.dim(1); }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

 private:
  Parameter weight_, bias_;
  Tensor input_;
};

class Conv1d : public Layer {
 public:
  Conv1d(std::size_t in_channels, std::size_t filters, std::size_t kernel, Padding padding, Rng& rng);
  Conv1d(Tensor weight, Tensor bias, Padding padding);

  LayerKind kind() const override { return LayerKind::Conv1d; }
  std::string describe() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  LayerPtr clone() const override { return std::make_unique<Conv1d>(*this); }

  std::size_t in_channels() const { return weight_.value.dim(1); }
  std::size_t filters() const { return weight_.value.dim(0); }
  std::size_t kernel() const { return weight_.value.dim(2); }
  Padding padding() const { return padding_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

 private:
  Parameter weight_, bias_;
  Padding padding_;
  Tensor input_;
};

/// Per-channel batch normalisation over batch (and time, for rank-3 input).
class BatchNorm1d : public Layer {
 public:
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.9;

  explicit BatchNorm1d(std::size_t channels);

  LayerKind kind() const override { return LayerKind::BatchNorm1d; }
  std::string describe() const override;
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_, &running_mean_, &running_var_}; }
  LayerPtr clone() const override { return std::make_unique<BatchNorm1d>(*this); }

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  Parameter& running_mean() { return running_mean_; }
  Parameter& running_var() { return running_var_; }

 private:
  Parameter gamma_, beta_, running_mean_, running_var_;
  // backward cache
  Tensor xhat_;
  std::vector<double> inv_std_;
  bool batch_stats_ = false;
};

/// Non-overlapping max pooling along time; trailing remainder dropped.
class MaxPool1d : public Layer {
 public:
  explicit MaxPool1d(std::size_t pool);

  LayerKind kind() const override { return LayerKind::MaxPool1d; }
  std::string describe() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  LayerPtr clone() const override { return std::make_unique<MaxPool1d>(*this); }
  std::size_t pool() const { return pool_; }

 private:
  std::size_t pool_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

class GlobalAvgPool : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::GlobalAvgPool; }
  Shape output_shape(const Shape& input) const override { return {input.at(0)}; }
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  LayerPtr clone() const override { return std::make_unique<GlobalAvgPool>(*this); }

 private:
  Shape input_shape_;
};

class Relu : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Relu; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  LayerPtr clone() const override { return std::make_unique<Relu>(*this); }

 private:
  Tensor output_;
};

/// [batch x channels x time] -> [batch x time x channels], feeding conv features to an LSTM.
class Transpose : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Transpose; }
  Shape output_shape(const Shape& input) const override { return {input.at(1), input.at(0)}; }
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  LayerPtr clone() const override { return std::make_unique<Transpose>(*this); }
};

/// LSTM over [batch x time x in]; gate order (input, forget, candidate, output).
/// Emits the final hidden state, or the full hidden sequence when stacked.
class Lstm : public Layer {
 public:
  Lstm(std::size_t in, std::size_t cells, bool return_sequences, Rng& rng);

  LayerKind kind() const override { return LayerKind::Lstm; }
  std::string describe() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override { return {&w_input_, &w_hidden_, &bias_}; }
  LayerPtr clone() const override { return std::make_unique<Lstm>(*this); }

  std::size_t in_features() const { return w_input_.value.dim(0); }
  std::size_t cells() const { return w_hidden_.value.dim(0); }
  bool return_sequences() const { return return_sequences_; }
  Parameter& w_input() { return w_input_; }
  Parameter& w_hidden() { return w_hidden_; }
  Parameter& bias() { return bias_; }

 private:
  Parameter w_input_;   // [in x 4u]
  Parameter w_hidden_;  // [u x 4u]
  Parameter bias_;      // [4u]
  bool return_sequences_;
  // per-step caches, each [time][batch x ...]
  Tensor input_;
  std::vector<AlignedVector> gates_;   // activated i,f,g,o: batch x 4u
  std::vector<AlignedVector> cell_;    // c_t: batch x u
  std::vector<AlignedVector> hidden_;  // h_t: batch x u
};

/// Residual block: main path plus identity or projection shortcut, summed then ReLU.
class Residual : public Layer {
 public:
  Residual(std::vector<LayerPtr> main, std::vector<LayerPtr> shortcut);
  Residual(const Residual& other);
  Residual& operator=(const Residual&) = delete;

  LayerKind kind() const override { return LayerKind::Residual; }
  std::string describe() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Context& ctx) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> parameters() override;
  LayerPtr clone() const override { return std::make_unique<Residual>(*this); }
  bool stochastic() const override;
  double kl() const override;
  void add_kl_grad(double weight) override;
  std::vector<Layer*> children() override;

  std::vector<LayerPtr>& main_path() { return main_; }
  std::vector<LayerPtr>& shortcut_path() { return shortcut_; }
  const std::vector<LayerPtr>& main_path() const { return main_; }
  const std::vector<LayerPtr>& shortcut_path() const { return shortcut_; }

 private:
  std::vector<LayerPtr> main_;
  std::vector<LayerPtr> shortcut_;
  Relu relu_;
};

/// Numerically stable row softmax of [batch x classes].
Tensor softmax(const Tensor& logits);

struct CrossEntropy {
  double loss = 0.0;  // mean negative log-likelihood
  Tensor probs;
  Tensor dlogits;     // gradient of the mean loss
};

CrossEntropy softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

struct AdamOptions {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update of one parameter at step t >= 1.
void adam_step(Parameter& p, const AdamOptions& opt, long t);

class Adam {
 public:
  explicit Adam(AdamOptions opt = {}) : opt_(opt) {}
  void step(const std::vector<Parameter*>& params);
  long steps() const noexcept { return t_; }
  const AdamOptions& options() const noexcept { return opt_; }

 private:
  AdamOptions opt_;
  long t_ = 0;
};

/// Builds a standalone layer from a spec (used by gradient checks and tests).
LayerPtr make_layer(const LayerSpec& spec, Rng& rng);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Compares analytic input and parameter gradients with central differences
/// of the scalar sum(y * R), R a fixed random projection. Noise is frozen
/// after the first pass so stochastic layers are checked on a fixed sample.
GradCheckResult grad_check(Layer& layer, const Tensor& x, Mode mode, std::uint64_t seed, double eps = 1e-5);

/// Random small shapes derived from `seed`; 64-bit throughout.
GradCheckResult grad_check(const LayerSpec& spec, std::uint64_t seed, double eps = 1e-5);

}  // namespace uqtsc
