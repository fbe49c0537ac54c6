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

namespace uqtsc {

const char* to_string(Family f) {
  switch (f) {
    case Family::Cnn: return "cnn";
    case Family::Lstm: return "lstm";
    case Family::CnnLstm: return "cnn_lstm";
    case Family::Fcn: return "fcn";
    case Family::Resnet: return "resnet";
  }
  return "?";
}

const char* to_string(UqMethod m) {
  switch (m) {
    case UqMethod::None: return "none";
    case UqMethod::McDropout: return "mc_dropout";
    case UqMethod::DropConnect: return "dropconnect";
    case UqMethod::Flipout: return "flipout";
  }
  return "?";
}

Family parse_family(const std::string& text) {
  for (auto f : {Family::Cnn, Family::Lstm, Family::CnnLstm, Family::Fcn, Family::Resnet}) {
    if (text == to_string(f)) return f;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown family '" + text + "'");
}

UqMethod parse_uq(const std::string& text) {
  for (auto m : {UqMethod::None, UqMethod::McDropout, UqMethod::DropConnect, UqMethod::Flipout}) {
    if (text == to_string(m)) return m;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown uq method '" + text + "'");
}

namespace {

void in_range(const char* name, long value, long lo, long hi) {
  if (value < lo || value > hi) {
    throw Error(ErrorKind::InvalidConfig, std::string(name) + " = " + std::to_string(value) + " outside [" +
                                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

void ModelConfig::validate() const {
  using R = ConfigRanges;
  in_range("batch_size", batch_size, R::kMinBatch, R::kMaxBatch);
  if (!(dropout_rate >= R::kMinDropout && dropout_rate <= R::kMaxDropout)) {
    throw Error(ErrorKind::InvalidConfig, "dropout_rate outside [0, 0.5]");
  }
  if (uses_cnn()) {
    in_range("cnn_blocks", cnn_blocks, R::kMinBlocks, R::kMaxBlocks);
    for (int i = 0; i < cnn_blocks; ++i) {
      in_range(("f" + std::to_string(i + 1)).c_str(), filters[i], R::kMinFilters, R::kMaxFilters);
      in_range(("k" + std::to_string(i + 1)).c_str(), kernels[i], R::kMinKernel, R::kMaxKernel);
    }
    in_range("max_pool", max_pool, R::kMinPool, R::kMaxPool);
  }
  if (uses_lstm()) {
    in_range("lstm_layers", lstm_layers, R::kMinBlocks, R::kMaxBlocks);
    for (int i = 0; i < lstm_layers; ++i) {
      in_range(("u" + std::to_string(i + 1)).c_str(), cells[i], R::kMinCells, R::kMaxCells);
    }
  }
}

const std::vector<std::string>& ModelConfig::keys() {
  static const std::vector<std::string> k = {"family", "uq",         "cnn_blocks",  "f1", "f2", "f3",
                                             "k1",     "k2",         "k3",          "max_pool",
                                             "lstm_layers", "u1",    "u2",          "u3", "batch_size",
                                             "dropout_rate"};
  return k;
}

KeyValues ModelConfig::to_kv() const {
  KeyValues kv;
  kv.set("family", std::string(to_string(family)));
  kv.set("uq", std::string(to_string(uq)));
  kv.set("cnn_blocks", static_cast<long>(cnn_blocks));
  for (int i = 0; i < 3; ++i) kv.set("f" + std::to_string(i + 1), static_cast<long>(filters[i]));
  for (int i = 0; i < 3; ++i) kv.set("k" + std::to_string(i + 1), static_cast<long>(kernels[i]));
  kv.set("max_pool", static_cast<long>(max_pool));
  kv.set("lstm_layers", static_cast<long>(lstm_layers));
  for (int i = 0; i < 3; ++i) kv.set("u" + std::to_string(i + 1), static_cast<long>(cells[i]));
  kv.set("batch_size", static_cast<long>(batch_size));
  kv.set("dropout_rate", dropout_rate);
  return kv;
}

ModelConfig ModelConfig::from_kv(const KeyValues& kv) {
  try {
    kv.reject_unknown(keys());
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  ModelConfig c;
  try {
    c.family = parse_family(kv.get_string("family"));
    c.uq = parse_uq(kv.get_string("uq", "none"));
    auto i = [&](const char* key, int fallback) { return static_cast<int>(kv.get_int(key, fallback)); };
    c.cnn_blocks = i("cnn_blocks", c.cnn_blocks);
    for (int b = 0; b < 3; ++b) {
      c.filters[b] = i(("f" + std::to_string(b + 1)).c_str(), c.filters[b]);
      c.kernels[b] = i(("k" + std::to_string(b + 1)).c_str(), c.kernels[b]);
      c.cells[b] = i(("u" + std::to_string(b + 1)).c_str(), c.cells[b]);
    }
    c.max_pool = i("max_pool", c.max_pool);
    c.lstm_layers = i("lstm_layers", c.lstm_layers);
    c.batch_size = i("batch_size", c.batch_size);
    c.dropout_rate = kv.get_double("dropout_rate", c.dropout_rate);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidConfig) throw;
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  return c;
}

}  // namespace uqtsc
