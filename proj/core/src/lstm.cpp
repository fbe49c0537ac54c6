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
#include <cmath>

#include "uqtsc/error.hpp"
#include "uqtsc/layers.hpp"

namespace uqtsc {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Lstm::Lstm(std::size_t in, std::size_t cells, bool return_sequences, Rng& rng)
    : w_input_("w_input", Tensor({in, 4 * cells})),
      w_hidden_("w_hidden", Tensor({cells, 4 * cells})),
      bias_("bias", Tensor({4 * cells})),
      return_sequences_(return_sequences) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(cells));
  for (auto& v : w_input_.value.values()) v = rng.uniform(-limit, limit);
  for (auto& v : w_hidden_.value.values()) v = rng.uniform(-limit, limit);
  for (std::size_t j = cells; j < 2 * cells; ++j) bias_.value[j] = 1.0;  // forget gate
}

std::string Lstm::describe() const {
  return "lstm(" + std::to_string(in_features()) + "->" + std::to_string(cells()) +
         (return_sequences_ ? ", sequences)" : ")");
}

Shape Lstm::output_shape(const Shape& input) const {
  if (input.size() != 2 || input[1] != in_features() || input[0] == 0) {
    throw Error(ErrorKind::ShapeMismatch, describe() + " got input " + shape_string(input));
  }
  if (return_sequences_) return {input[0], cells()};
  return {cells()};
}

Tensor Lstm::forward(const Tensor& x, Context&) {
  if (x.rank() != 3 || x.dim(2) != in_features() || x.dim(1) == 0) {
    throw Error(ErrorKind::ShapeMismatch, describe() + " got input " + shape_string(x.shape()));
  }
  const auto batch = x.dim(0), steps = x.dim(1), in = x.dim(2), u = cells();
  input_ = x;
  gates_.assign(steps, AlignedVector(batch * 4 * u));
  cell_.assign(steps, AlignedVector(batch * u));
  hidden_.assign(steps, AlignedVector(batch * u));

  ConstMatMap wx(w_input_.value.data(), in, 4 * u);
  ConstMatMap wh(w_hidden_.value.data(), u, 4 * u);
  const Eigen::Map<const Eigen::RowVectorXd> b(bias_.value.data(), 4 * u);
  RowMatrix xt(batch, in), z(batch, 4 * u);
  RowMatrix h = RowMatrix::Zero(batch, u), c = RowMatrix::Zero(batch, u);

  Tensor y = return_sequences_ ? Tensor({batch, steps, u}) : Tensor({batch, u});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t i = 0; i < in; ++i) xt(n, i) = x[(n * steps + t) * in + i];
    }
    z.noalias() = xt * wx;
    z.noalias() += h * wh;
    z.rowwise() += b;
    auto& g = gates_[t];
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t j = 0; j < u; ++j) {
        const double ig = sigmoid(z(n, j));
        const double fg = sigmoid(z(n, u + j));
        const double cg = std::tanh(z(n, 2 * u + j));
        const double og = sigmoid(z(n, 3 * u + j));
        g[n * 4 * u + j] = ig;
        g[n * 4 * u + u + j] = fg;
        g[n * 4 * u + 2 * u + j] = cg;
        g[n * 4 * u + 3 * u + j] = og;
        c(n, j) = fg * c(n, j) + ig * cg;
        h(n, j) = og * std::tanh(c(n, j));
        cell_[t][n * u + j] = c(n, j);
        hidden_[t][n * u + j] = h(n, j);
        if (return_sequences_) y[(n * steps + t) * u + j] = h(n, j);
      }
    }
  }
  if (!return_sequences_) std::copy(hidden_.back().begin(), hidden_.back().end(), y.data());
  return y;
}

Tensor Lstm::backward(const Tensor& dy) {
  const auto batch = input_.dim(0), steps = input_.dim(1), in = input_.dim(2), u = cells();
  ConstMatMap wx(w_input_.value.data(), in, 4 * u);
  ConstMatMap wh(w_hidden_.value.data(), u, 4 * u);
  MatMap dwx(w_input_.grad.data(), in, 4 * u);
  MatMap dwh(w_hidden_.grad.data(), u, 4 * u);

  Tensor dx(input_.shape());
  RowMatrix dh_next = RowMatrix::Zero(batch, u), dc_next = RowMatrix::Zero(batch, u);
  RowMatrix dz(batch, 4 * u), xt(batch, in), h_prev(batch, u);

  for (std::size_t step = steps; step-- > 0;) {
    const auto& g = gates_[step];
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t j = 0; j < u; ++j) {
        double dh = dh_next(n, j);
        if (return_sequences_) dh += dy[(n * steps + step) * u + j];
        else if (step == steps - 1) dh += dy[n * u + j];
        const double ig = g[n * 4 * u + j];
        const double fg = g[n * 4 * u + u + j];
        const double cg = g[n * 4 * u + 2 * u + j];
        const double og = g[n * 4 * u + 3 * u + j];
        const double ct = cell_[step][n * u + j];
        const double tc = std::tanh(ct);
        const double c_prev = step > 0 ? cell_[step - 1][n * u + j] : 0.0;
        const double dc = dc_next(n, j) + dh * og * (1.0 - tc * tc);
        dz(n, j) = dc * cg * ig * (1.0 - ig);
        dz(n, u + j) = dc * c_prev * fg * (1.0 - fg);
        dz(n, 2 * u + j) = dc * ig * (1.0 - cg * cg);
        dz(n, 3 * u + j) = dh * tc * og * (1.0 - og);
        dc_next(n, j) = dc * fg;
        h_prev(n, j) = step > 0 ? hidden_[step - 1][n * u + j] : 0.0;
      }
      for (std::size_t i = 0; i < in; ++i) xt(n, i) = input_[(n * steps + step) * in + i];
    }
    dwx.noalias() += xt.transpose() * dz;
    dwh.noalias() += h_prev.transpose() * dz;
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t j = 0; j < 4 * u; ++j) bias_.grad[j] += dz(n, j);
    }
    const RowMatrix dxt = dz * wx.transpose();
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t i = 0; i < in; ++i) dx[(n * steps + step) * in + i] = dxt(n, i);
    }
    dh_next.noalias() = dz * wh.transpose();
  }
  return dx;
}

}  // namespace uqtsc
