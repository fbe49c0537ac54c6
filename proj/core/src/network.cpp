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

#include <cstdio>

#include "uqtsc/arch.hpp"
#include "uqtsc/error.hpp"

namespace uqtsc {

Network::Network(ModelConfig config, InputShape input) : config_(config), input_(input) {}

Network::Network(const Network& other) : config_(other.config_), input_(other.input_) {
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

Tensor Network::forward(const Tensor& x, Context& ctx) {
  if (x.rank() != 3 || x.dim(1) != input_.channels || x.dim(2) != input_.length) {
    throw Error(ErrorKind::ShapeMismatch, "network expects [batch x " + std::to_string(input_.channels) + " x " +
                                              std::to_string(input_.length) + "], got " + shape_string(x.shape()));
  }
  x.check_finite("network input");
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, ctx);
  h.check_finite("network output");
  return h;
}

Tensor Network::backward(const Tensor& dlogits) {
  Tensor g = dlogits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

namespace {

void collect(Layer& layer, const std::string& prefix, std::vector<std::pair<std::string, Parameter*>>& out) {
  if (auto* res = dynamic_cast<Residual*>(&layer)) {
    for (std::size_t i = 0; i < res->main_path().size(); ++i) {
      collect(*res->main_path()[i], prefix + "main" + std::to_string(i) + ".", out);
    }
    for (std::size_t i = 0; i < res->shortcut_path().size(); ++i) {
      collect(*res->shortcut_path()[i], prefix + "short" + std::to_string(i) + ".", out);
    }
    return;
  }
  for (auto* p : layer.parameters()) out.emplace_back(prefix + to_string(layer.kind()) + "." + p->name, p);
}

}  // namespace

std::vector<std::pair<std::string, Parameter*>> Network::named_parameters() {
  std::vector<std::pair<std::string, Parameter*>> out;
  char buf[16];
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "L%02zu.", i);
    collect(*layers_[i], buf, out);
  }
  return out;
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& [name, p] : named_parameters()) out.push_back(p);
  return out;
}

void Network::zero_grad() {
  for (auto* p : parameters()) {
    if (p->trainable) p->zero_grad();
  }
}

double Network::kl() const {
  double s = 0.0;
  for (const auto& l : layers_) s += l->kl();
  return s;
}

void Network::add_kl_grad(double weight) {
  for (auto& l : layers_) l->add_kl_grad(weight);
}

bool Network::stochastic() const {
  for (const auto& l : layers_) {
    if (l->stochastic()) return true;
  }
  return false;
}

std::vector<Shape> Network::layer_shapes() const {
  std::vector<Shape> shapes;
  Shape s = {input_.channels, input_.length};
  for (const auto& l : layers_) {
    s = l->output_shape(s);
    shapes.push_back(s);
  }
  return shapes;
}

std::string Network::summary() const {
  std::string out;
  const auto shapes = layer_shapes();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    out += layers_[i]->describe() + " -> " + shape_string(shapes[i]) + "\n";
  }
  return out;
}

}  // namespace uqtsc
