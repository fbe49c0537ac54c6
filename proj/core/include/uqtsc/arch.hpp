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

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uqtsc/kv.hpp"
#include "uqtsc/layers.hpp"

namespace uqtsc {

enum class Family { Cnn, Lstm, CnnLstm, Fcn, Resnet };
enum class UqMethod { None, McDropout, DropConnect, Flipout };

const char* to_string(Family f);
const char* to_string(UqMethod m);
Family parse_family(const std::string& text);
UqMethod parse_uq(const std::string& text);

/// Search-space ranges of the tunable architectures.
struct ConfigRanges {
  static constexpr int kMinBlocks = 1, kMaxBlocks = 3;
  static constexpr int kMinFilters = 16, kMaxFilters = 128;
  static constexpr int kMinKernel = 4, kMaxKernel = 16;
  static constexpr int kMinPool = 2, kMaxPool = 8;
  static constexpr int kMinCells = 8, kMaxCells = 128;
  static constexpr int kMinBatch = 16, kMaxBatch = 64;
  static constexpr double kMinDropout = 0.0, kMaxDropout = 0.5;
};

/// One point of the architecture configuration space. Fields that the family
/// does not use are stored but ignored; inactive per-block entries are 0.
struct ModelConfig {
  Family family = Family::Cnn;
  UqMethod uq = UqMethod::None;
  int cnn_blocks = 1;
  std::array<int, 3> filters{16, 0, 0};
  std::array<int, 3> kernels{4, 0, 0};
  int max_pool = 2;
  int lstm_layers = 1;
  std::array<int, 3> cells{8, 0, 0};
  int batch_size = 32;
  double dropout_rate = 0.0;

  bool uses_cnn() const noexcept { return family == Family::Cnn || family == Family::CnnLstm; }
  bool uses_lstm() const noexcept { return family == Family::Lstm || family == Family::CnnLstm; }

  /// Throws InvalidConfig on any out-of-range active field.
  void validate() const;

  /// Flat `key = value` form; keys: family, uq, cnn_blocks, f1..f3, k1..k3,
  /// max_pool, lstm_layers, u1..u3, batch_size, dropout_rate.
  KeyValues to_kv() const;
  static ModelConfig from_kv(const KeyValues& kv);
  static const std::vector<std::string>& keys();

  bool operator==(const ModelConfig&) const = default;
};

struct InputShape {
  std::size_t channels = 0;
  std::size_t length = 0;
  bool operator==(const InputShape&) const = default;
};

/// Ordered layer stack producing 2-class logits from [batch x channels x time].
class Network {
 public:
  Network(ModelConfig config, InputShape input);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const ModelConfig& config() const noexcept { return config_; }
  ModelConfig& config() noexcept { return config_; }
  InputShape input() const noexcept { return input_; }

  void add(LayerPtr layer) { layers_.push_back(std::move(layer)); }
  std::vector<LayerPtr>& layers() noexcept { return layers_; }
  const std::vector<LayerPtr>& layers() const noexcept { return layers_; }

  Tensor forward(const Tensor& x, Context& ctx);
  Tensor backward(const Tensor& dlogits);

  /// Every parameter including running statistics, with stable dotted names.
  std::vector<std::pair<std::string, Parameter*>> named_parameters();
  std::vector<Parameter*> parameters();
  void zero_grad();

  double kl() const;
  void add_kl_grad(double weight);
  bool stochastic() const;

  /// Per-example shape after every top-level layer; throws on any mismatch.
  std::vector<Shape> layer_shapes() const;
  std::string summary() const;

 private:
  ModelConfig config_;
  InputShape input_;
  std::vector<LayerPtr> layers_;
};

Network build_cnn(const ModelConfig& config, InputShape input, Rng& rng);
Network build_lstm(const ModelConfig& config, InputShape input, Rng& rng);
Network build_cnn_lstm(const ModelConfig& config, InputShape input, Rng& rng);
/// Fixed benchmark networks: three conv blocks (128/256/128 filters, kernels 8/5/3).
Network build_fcn(InputShape input, Rng& rng);
Network build_resnet(InputShape input, Rng& rng);

/// Builds the family's network and applies the configured UQ method.
Network build_network(const ModelConfig& config, InputShape input, std::uint64_t seed);

/// Time-axis length after each CNN block; ShapeCollapse once it reaches 0.
std::vector<std::size_t> cnn_block_lengths(const ModelConfig& config, std::size_t length);

/// Wraps layers according to the UQ placement rules. UqMethod::None is the identity.
Network apply_uq(const Network& net, UqMethod method);
/// Replaces every UQ layer by its deterministic counterpart.
Network strip_uq(const Network& net);

/// Trainable scalar count (running statistics excluded).
std::size_t param_count(Network& net);

inline constexpr const char* kCheckpointMagic = "UQTSC-CKPT-1";

void write_checkpoint(Network& net, const std::string& path);
std::string format_checkpoint(Network& net);
Network read_checkpoint(const std::string& path);
Network parse_checkpoint(const std::string& text);

}  // namespace uqtsc
