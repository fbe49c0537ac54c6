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

namespace uqtsc {

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw Error(ErrorKind::ShapeMismatch, "softmax expects [batch x classes]");
  const auto batch = logits.dim(0), classes = logits.dim(1);
  Tensor probs(logits.shape());
  for (std::size_t n = 0; n < batch; ++n) {
    const double* z = logits.data() + n * classes;
    const double zmax = *std::max_element(z, z + classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) total += (probs.at(n, c) = std::exp(z[c] - zmax));
    for (std::size_t c = 0; c < classes; ++c) probs.at(n, c) /= total;
  }
  return probs;
}

CrossEntropy softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw Error(ErrorKind::ShapeMismatch, "cross-entropy: logits " + shape_string(logits.shape()) + " vs " +
                                              std::to_string(labels.size()) + " labels");
  }
  const auto batch = logits.dim(0), classes = logits.dim(1);
  CrossEntropy out;
  out.probs = softmax(logits);
  out.dlogits = out.probs;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double total = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    const int y = labels[n];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(y));
    }
    // log p_y = z_y - logsumexp(z)
    const double* z = logits.data() + n * classes;
    const double zmax = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(z[c] - zmax);
    total -= z[y] - zmax - std::log(sum);
    out.dlogits.at(n, static_cast<std::size_t>(y)) -= 1.0;
  }
  for (auto& g : out.dlogits.values()) g *= inv_batch;
  out.loss = total * inv_batch;
  return out;
}

void adam_step(Parameter& p, const AdamOptions& opt, long t) {
  if (!p.trainable) return;
  if (t < 1) throw Error(ErrorKind::InvalidArgument, "adam step counter must start at 1");
  if (!p.grad.same_shape(p.value) || !p.m.same_shape(p.value) || !p.v.same_shape(p.value)) {
    throw Error(ErrorKind::ShapeMismatch, "adam: buffers of '" + p.name + "' do not match its shape");
  }
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double g = p.grad[i];
    p.m[i] = opt.beta1 * p.m[i] + (1.0 - opt.beta1) * g;
    p.v[i] = opt.beta2 * p.v[i] + (1.0 - opt.beta2) * g * g;
    const double mhat = p.m[i] / c1;
    const double vhat = p.v[i] / c2;
    p.value[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
  }
}

void Adam::step(const std::vector<Parameter*>& params) {
  ++t_;
  for (auto* p : params) adam_step(*p, opt_, t_);
}

}  // namespace uqtsc
