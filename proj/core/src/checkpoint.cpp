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

#include <fstream>
#include <map>
#include <sstream>

#include "uqtsc/arch.hpp"
#include "uqtsc/error.hpp"

// Text layout:
//   UQTSC-CKPT-1
//   [config]
//   key = value ...
//   [input]
//   channels = C
//   length = L
//   [params]
//   <name> <d0>x<d1>... <v0> <v1> ...
//   end

namespace uqtsc {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::MalformedCheckpoint, what); }

std::string shape_token(const Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s.empty() ? "scalar" : s;
}

Shape parse_shape(const std::string& token) {
  Shape shape;
  if (token == "scalar") return shape;
  for (const auto& part : split(token, 'x')) {
    auto v = parse_long(part);
    if (!v || *v <= 0) malformed("bad shape token '" + token + "'");
    shape.push_back(static_cast<std::size_t>(*v));
  }
  return shape;
}

struct StoredParam {
  Shape shape;
  std::vector<double> values;
};

}  // namespace

std::string format_checkpoint(Network& net) {
  std::ostringstream out;
  out << kCheckpointMagic << "\n[config]\n" << net.config().to_kv().format();
  out << "[input]\nchannels = " << net.input().channels << "\nlength = " << net.input().length << "\n[params]\n";
  for (const auto& [name, p] : net.named_parameters()) {
    out << name << ' ' << shape_token(p->value.shape());
    for (double v : p->value.values()) out << ' ' << format_double(v);
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

void write_checkpoint(Network& net, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write checkpoint " + path);
  f << format_checkpoint(net);
  if (!f) throw Error(ErrorKind::Io, "write failed for " + path);
}

Network parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCheckpointMagic) malformed("missing UQTSC-CKPT-1 magic");

  std::string section;
  std::string config_text, input_text;
  std::map<std::string, StoredParam> stored;
  bool ended = false;
  while (std::getline(in, line)) {
    const auto t = std::string(trim(line));
    if (t.empty()) continue;
    if (t == "end") {
      ended = true;
      break;
    }
    if (t.front() == '[') {
      section = t;
      continue;
    }
    if (section == "[config]") {
      config_text += t + "\n";
    } else if (section == "[input]") {
      input_text += t + "\n";
    } else if (section == "[params]") {
      std::istringstream ls(t);
      std::string name, shape_text, tok;
      ls >> name >> shape_text;
      StoredParam p;
      p.shape = parse_shape(shape_text);
      while (ls >> tok) {
        auto v = parse_double(tok);
        if (!v) malformed("non-numeric value in parameter " + name);
        p.values.push_back(*v);
      }
      if (p.values.size() != shape_size(p.shape)) malformed("value count does not match shape for " + name);
      if (!stored.emplace(name, std::move(p)).second) malformed("duplicate parameter " + name);
    } else {
      malformed("content outside a section");
    }
  }
  if (!ended) malformed("truncated checkpoint (no end marker)");

  ModelConfig config;
  InputShape input;
  try {
    config = ModelConfig::from_kv(KeyValues::parse(config_text));
    const auto kv = KeyValues::parse(input_text);
    input.channels = static_cast<std::size_t>(kv.get_int("channels"));
    input.length = static_cast<std::size_t>(kv.get_int("length"));
  } catch (const Error& e) {
    malformed(std::string("bad header: ") + e.what());
  }

  Network net = build_network(config, input, 0);
  auto named = net.named_parameters();
  if (named.size() != stored.size()) {
    throw Error(ErrorKind::CheckpointMismatch, "checkpoint has " + std::to_string(stored.size()) +
                                                   " parameters, network expects " + std::to_string(named.size()));
  }
  for (auto& [name, p] : named) {
    auto it = stored.find(name);
    if (it == stored.end()) throw Error(ErrorKind::CheckpointMismatch, "parameter " + name + " missing");
    if (it->second.shape != p->value.shape()) {
      throw Error(ErrorKind::CheckpointMismatch, "shape mismatch for " + name + ": stored " +
                                                     shape_string(it->second.shape) + ", expected " +
                                                     shape_string(p->value.shape()));
    }
    std::copy(it->second.values.begin(), it->second.values.end(), p->value.data());
  }
  return net;
}

Network read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace uqtsc
