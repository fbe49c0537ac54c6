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

#include <algorithm>
#include <cmath>

#include "uqtsc/error.hpp"
#include "uqtsc/layers.hpp"
#include "uqtsc/uq.hpp"

namespace uqtsc {

LayerPtr make_layer(const LayerSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case LayerKind::Dense: return std::make_unique<Dense>(spec.in, spec.out, rng);
    case LayerKind::Conv1d: return std::make_unique<Conv1d>(spec.in, spec.out, spec.kernel, spec.padding, rng);
    case LayerKind::BatchNorm1d: return std::make_unique<BatchNorm1d>(spec.in);
    case LayerKind::MaxPool1d: return std::make_unique<MaxPool1d>(spec.pool);
    case LayerKind::GlobalAvgPool: return std::make_unique<GlobalAvgPool>();
    case LayerKind::Relu: return std::make_unique<Relu>();
    case LayerKind::Transpose: return std::make_unique<Transpose>();
    case LayerKind::Lstm: return std::make_unique<Lstm>(spec.in, spec.out, spec.return_sequences, rng);
    case LayerKind::Dropout: return std::make_unique<Dropout>(spec.rate);
    case LayerKind::DropConnectDense: return std::make_unique<DropConnectDense>(Dense(spec.in, spec.out, rng), spec.rate);
    case LayerKind::DropConnectConv1d:
      return std::make_unique<DropConnectConv1d>(Conv1d(spec.in, spec.out, spec.kernel, spec.padding, rng), spec.rate);
    case LayerKind::FlipoutDense: return std::make_unique<FlipoutDense>(spec.in, spec.out, rng);
    case LayerKind::Softmax:
    case LayerKind::Residual: break;
  }
  throw Error(ErrorKind::InvalidArgument, std::string("cannot build standalone layer of kind ") + to_string(spec.kind));
}

namespace {

double projected_loss(Layer& layer, const Tensor& x, const Tensor& proj, Context& ctx) {
  const Tensor y = layer.forward(x, ctx);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * proj[i];
  return s;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace

GradCheckResult grad_check(Layer& layer, const Tensor& x, Mode mode, std::uint64_t seed, double eps) {
  Rng noise(Rng::mix(seed) ^ 0x5eedULL);
  Context ctx{mode, &noise, false};
  const Tensor y = layer.forward(x, ctx);
  ctx.freeze_noise = true;

  Rng proj_rng(seed + 17);
  Tensor proj(y.shape());
  for (auto& v : proj.values()) v = proj_rng.uniform(-1.0, 1.0);

  auto params = layer.parameters();
  for (auto* p : params) {
    if (p->trainable) p->zero_grad();
  }
  const Tensor dx = layer.backward(proj);

  GradCheckResult result;
  Tensor xp = x;
  for (std::size_t i = 0; i < xp.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + eps;
    const double up = projected_loss(layer, xp, proj, ctx);
    xp[i] = orig - eps;
    const double down = projected_loss(layer, xp, proj, ctx);
    xp[i] = orig;
    result.max_rel_error = std::max(result.max_rel_error, relative_error(dx[i], (up - down) / (2.0 * eps)));
    ++result.checked;
  }
  for (auto* p : params) {
    if (!p->trainable) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + eps;
      const double up = projected_loss(layer, x, proj, ctx);
      p->value[i] = orig - eps;
      const double down = projected_loss(layer, x, proj, ctx);
      p->value[i] = orig;
      result.max_rel_error =
          std::max(result.max_rel_error, relative_error(p->grad[i], (up - down) / (2.0 * eps)));
      ++result.checked;
    }
  }
  return result;
}

GradCheckResult grad_check(const LayerSpec& spec, std::uint64_t seed, double eps) {
  Rng rng(seed);
  auto layer = make_layer(spec, rng);
  const std::size_t batch = 2 + static_cast<std::size_t>(rng.uniform_int(0, 1));
  Shape shape;
  Mode mode = Mode::Infer;
  switch (spec.kind) {
    case LayerKind::Dense:
    case LayerKind::DropConnectDense:
    case LayerKind::FlipoutDense: shape = {batch, spec.in}; break;
    case LayerKind::Lstm: shape = {batch, spec.length, spec.in}; break;
    case LayerKind::BatchNorm1d: shape = {batch, spec.in, spec.length}; mode = Mode::Train; break;
    default: shape = {batch, std::max<std::size_t>(spec.in, 1), spec.length}; break;
  }
  if (spec.kind == LayerKind::Dropout || spec.kind == LayerKind::DropConnectDense ||
      spec.kind == LayerKind::DropConnectConv1d || spec.kind == LayerKind::FlipoutDense) {
    mode = Mode::Train;
  }
  Tensor x(shape);
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  return grad_check(*layer, x, mode, seed, eps);
}

}  // namespace uqtsc
