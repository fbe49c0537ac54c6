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

#include "uqtsc/arch.hpp"

#include "uqtsc/error.hpp"
#include "uqtsc/uq.hpp"

#include <optional>

namespace uqtsc {

namespace {

constexpr std::size_t kClasses = 2;

void require_family(const ModelConfig& config, Family family) {
  if (config.family != family) {
    throw Error(ErrorKind::InvalidConfig, std::string("expected family ") + to_string(family) + ", got " +
                                              to_string(config.family));
  }
}

void require_input(InputShape input) {
  if (input.channels == 0 || input.length == 0) throw Error(ErrorKind::InvalidConfig, "input shape must be nonzero");
}

// conv -> batchnorm -> relu -> maxpool per block; returns the final channel count.
std::size_t add_cnn_blocks(Network& net, const ModelConfig& config, Rng& rng) {
  std::size_t channels = net.input().channels;
  for (int b = 0; b < config.cnn_blocks; ++b) {
    const auto filters = static_cast<std::size_t>(config.filters[b]);
    net.add(std::make_unique<Conv1d>(channels, filters, static_cast<std::size_t>(config.kernels[b]), Padding::Same, rng));
    net.add(std::make_unique<BatchNorm1d>(filters));
    net.add(std::make_unique<Relu>());
    net.add(std::make_unique<MaxPool1d>(static_cast<std::size_t>(config.max_pool)));
    channels = filters;
  }
  return channels;
}

std::size_t add_lstm_stack(Network& net, const ModelConfig& config, std::size_t features, Rng& rng) {
  net.add(std::make_unique<Transpose>());
  for (int l = 0; l < config.lstm_layers; ++l) {
    const auto cells = static_cast<std::size_t>(config.cells[l]);
    net.add(std::make_unique<Lstm>(features, cells, l + 1 < config.lstm_layers, rng));
    features = cells;
  }
  return features;
}

}  // namespace

std::vector<std::size_t> cnn_block_lengths(const ModelConfig& config, std::size_t length) {
  std::vector<std::size_t> lengths;
  for (int b = 0; b < config.cnn_blocks; ++b) {
    length /= static_cast<std::size_t>(config.max_pool);
    if (length == 0) {
      throw Error(ErrorKind::ShapeCollapse, "pooling reduces the time axis to 0 in block " + std::to_string(b + 1));
    }
    lengths.push_back(length);
  }
  return lengths;
}

Network build_cnn(const ModelConfig& config, InputShape input, Rng& rng) {
  require_family(config, Family::Cnn);
  config.validate();
  require_input(input);
  cnn_block_lengths(config, input.length);
  ModelConfig plain = config;
  plain.uq = UqMethod::None;
  Network net(plain, input);
  const auto channels = add_cnn_blocks(net, config, rng);
  net.add(std::make_unique<GlobalAvgPool>());
  net.add(std::make_unique<Dense>(channels, kClasses, rng));
  return net;
}

Network build_lstm(const ModelConfig& config, InputShape input, Rng& rng) {
  require_family(config, Family::Lstm);
  config.validate();
  require_input(input);
  ModelConfig plain = config;
  plain.uq = UqMethod::None;
  Network net(plain, input);
  const auto features = add_lstm_stack(net, config, input.channels, rng);
  net.add(std::make_unique<Dense>(features, kClasses, rng));
  return net;
}

Network build_cnn_lstm(const ModelConfig& config, InputShape input, Rng& rng) {
  require_family(config, Family::CnnLstm);
  config.validate();
  require_input(input);
  cnn_block_lengths(config, input.length);
  ModelConfig plain = config;
  plain.uq = UqMethod::None;
  Network net(plain, input);
  const auto channels = add_cnn_blocks(net, config, rng);
  const auto features = add_lstm_stack(net, config, channels, rng);
  net.add(std::make_unique<Dense>(features, kClasses, rng));
  return net;
}

namespace {

constexpr std::array<std::size_t, 3> kBenchFilters = {128, 256, 128};
constexpr std::array<std::size_t, 3> kBenchKernels = {8, 5, 3};

ModelConfig benchmark_config(Family family) {
  ModelConfig c;
  c.family = family;
  c.cnn_blocks = 3;
  c.filters = {128, 256, 128};
  c.kernels = {8, 5, 3};
  c.lstm_layers = 0;
  c.cells = {0, 0, 0};
  c.dropout_rate = 0.25;
  return c;
}

}  // namespace

Network build_fcn(InputShape input, Rng& rng) {
  require_input(input);
  Network net(benchmark_config(Family::Fcn), input);
  std::size_t channels = input.channels;
  for (std::size_t b = 0; b < 3; ++b) {
    net.add(std::make_unique<Conv1d>(channels, kBenchFilters[b], kBenchKernels[b], Padding::Same, rng));
    net.add(std::make_unique<BatchNorm1d>(kBenchFilters[b]));
    net.add(std::make_unique<Relu>());
    channels = kBenchFilters[b];
  }
  net.add(std::make_unique<GlobalAvgPool>());
  net.add(std::make_unique<Dense>(channels, kClasses, rng));
  return net;
}

Network build_resnet(InputShape input, Rng& rng) {
  require_input(input);
  Network net(benchmark_config(Family::Resnet), input);
  std::size_t channels = input.channels;
  for (int block = 0; block < 3; ++block) {
    std::vector<LayerPtr> main;
    std::size_t c = channels;
    for (std::size_t j = 0; j < 3; ++j) {
      main.push_back(std::make_unique<Conv1d>(c, kBenchFilters[j], kBenchKernels[j], Padding::Same, rng));
      main.push_back(std::make_unique<BatchNorm1d>(kBenchFilters[j]));
      if (j < 2) main.push_back(std::make_unique<Relu>());
      c = kBenchFilters[j];
    }
    std::vector<LayerPtr> shortcut;
    if (channels != c) {
      shortcut.push_back(std::make_unique<Conv1d>(channels, c, 1, Padding::Same, rng));
      shortcut.push_back(std::make_unique<BatchNorm1d>(c));
    }
    net.add(std::make_unique<Residual>(std::move(main), std::move(shortcut)));
    channels = c;
  }
  net.add(std::make_unique<GlobalAvgPool>());
  net.add(std::make_unique<Dense>(channels, kClasses, rng));
  return net;
}

Network build_network(const ModelConfig& config, InputShape input, std::uint64_t seed) {
  Rng rng(seed);
  Network net = [&] {
    switch (config.family) {
      case Family::Cnn: return build_cnn(config, input, rng);
      case Family::Lstm: return build_lstm(config, input, rng);
      case Family::CnnLstm: return build_cnn_lstm(config, input, rng);
      case Family::Fcn: return build_fcn(input, rng);
      case Family::Resnet: return build_resnet(input, rng);
    }
    throw Error(ErrorKind::InvalidConfig, "unknown family");
  }();
  if (config.family == Family::Fcn || config.family == Family::Resnet) {
    // Benchmarks keep their fixed topology; only batch size and rate come from the config.
    config.validate();
    net.config().batch_size = config.batch_size;
    net.config().dropout_rate = config.dropout_rate;
  }
  return apply_uq(net, config.uq);
}

// ---------------------------------------------------------------------------
// UQ placement

namespace {

bool is_uq_layer(const Layer& l) {
  switch (l.kind()) {
    case LayerKind::Dropout:
    case LayerKind::DropConnectDense:
    case LayerKind::DropConnectConv1d:
    case LayerKind::FlipoutDense: return true;
    default: return false;
  }
}

bool contains_uq(const std::vector<LayerPtr>& layers) {
  for (const auto& l : layers) {
    if (is_uq_layer(*l)) return true;
    if (const auto* r = dynamic_cast<const Residual*>(l.get())) {
      if (contains_uq(r->main_path()) || contains_uq(r->shortcut_path())) return true;
    }
  }
  return false;
}

std::optional<std::size_t> head_index(const std::vector<LayerPtr>& layers) {
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (layers[i]->kind() == LayerKind::Dense) return i;
  }
  return std::nullopt;
}

LayerPtr wrap_conv(const Layer& l, double rate) {
  return std::make_unique<DropConnectConv1d>(dynamic_cast<const Conv1d&>(l), rate);
}

LayerPtr wrap_dense(const Layer& l, double rate) {
  return std::make_unique<DropConnectDense>(dynamic_cast<const Dense&>(l), rate);
}

}  // namespace

Network apply_uq(const Network& net, UqMethod method) {
  if (method == UqMethod::None) return net;
  if (net.config().uq != UqMethod::None || contains_uq(net.layers())) {
    throw Error(ErrorKind::AlreadyWrapped, "network already carries UQ layers");
  }
  const auto& config = net.config();
  const double rate = config.dropout_rate;
  const auto head = head_index(net.layers());
  const bool has_lstm = config.uses_lstm();

  ModelConfig wrapped_config = config;
  wrapped_config.uq = method;
  Network out(wrapped_config, net.input());
  std::size_t changes = 0;
  std::size_t convs_seen = 0;
  int residual_seen = 0;

  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Layer& layer = *net.layers()[i];
    const bool is_head = head && *head == i;

    if (is_head && method == UqMethod::McDropout && has_lstm) {
      out.add(std::make_unique<Dropout>(rate));
      ++changes;
    }

    if (const auto* res = dynamic_cast<const Residual*>(&layer)) {
      // Residual path convolutions only; projection shortcuts stay deterministic.
      std::vector<LayerPtr> main, shortcut;
      for (const auto& l : res->main_path()) {
        if (l->kind() == LayerKind::Conv1d && method == UqMethod::DropConnect) {
          main.push_back(wrap_conv(*l, rate));
          ++changes;
        } else {
          main.push_back(l->clone());
        }
        if (l->kind() == LayerKind::Conv1d && method == UqMethod::McDropout && residual_seen < 2) {
          main.push_back(std::make_unique<Dropout>(rate));
          ++changes;
        }
      }
      for (const auto& l : res->shortcut_path()) shortcut.push_back(l->clone());
      out.add(std::make_unique<Residual>(std::move(main), std::move(shortcut)));
      ++residual_seen;
      continue;
    }

    if (layer.kind() == LayerKind::Conv1d) {
      ++convs_seen;
      if (method == UqMethod::DropConnect && config.family != Family::Lstm) {
        out.add(wrap_conv(layer, rate));
        ++changes;
      } else {
        out.add(layer.clone());
      }
      // Dropout after the convolution, before batch normalisation, first two blocks only.
      if (method == UqMethod::McDropout && convs_seen <= 2) {
        out.add(std::make_unique<Dropout>(rate));
        ++changes;
      }
      continue;
    }

    if (is_head && method == UqMethod::Flipout) {
      out.add(std::make_unique<FlipoutDense>(dynamic_cast<const Dense&>(layer)));
      ++changes;
      continue;
    }
    if (is_head && method == UqMethod::DropConnect &&
        (config.family == Family::Lstm || config.family == Family::Fcn)) {
      out.add(wrap_dense(layer, rate));
      ++changes;
      continue;
    }
    out.add(layer.clone());
  }
  if (changes == 0) {
    throw Error(ErrorKind::UnsupportedCombination, std::string("no layer eligible for ") + to_string(method) +
                                                       " in a " + to_string(config.family) + " network");
  }
  return out;
}

namespace {

void strip_into(const std::vector<LayerPtr>& in, std::vector<LayerPtr>& out) {
  for (const auto& l : in) {
    switch (l->kind()) {
      case LayerKind::Dropout: break;
      case LayerKind::DropConnectDense:
        out.push_back(std::make_unique<Dense>(dynamic_cast<const DropConnectDense&>(*l).base()));
        break;
      case LayerKind::DropConnectConv1d:
        out.push_back(std::make_unique<Conv1d>(dynamic_cast<const DropConnectConv1d&>(*l).base()));
        break;
      case LayerKind::FlipoutDense:
        out.push_back(std::make_unique<Dense>(dynamic_cast<const FlipoutDense&>(*l).mean_layer()));
        break;
      case LayerKind::Residual: {
        const auto& r = dynamic_cast<const Residual&>(*l);
        std::vector<LayerPtr> main, shortcut;
        strip_into(r.main_path(), main);
        strip_into(r.shortcut_path(), shortcut);
        out.push_back(std::make_unique<Residual>(std::move(main), std::move(shortcut)));
        break;
      }
      default: out.push_back(l->clone());
    }
  }
}

}  // namespace

Network strip_uq(const Network& net) {
  ModelConfig config = net.config();
  config.uq = UqMethod::None;
  Network out(config, net.input());
  std::vector<LayerPtr> layers;
  strip_into(net.layers(), layers);
  for (auto& l : layers) out.add(std::move(l));
  return out;
}

std::size_t param_count(Network& net) {
  std::size_t n = 0;
  for (auto* p : net.parameters()) {
    if (p->trainable) n += p->value.size();
  }
  return n;
}

}  // namespace uqtsc
