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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "uqtsc/data.hpp"
#include "uqtsc/error.hpp"
#include "uqtsc/kv.hpp"

namespace uqtsc {

namespace {

constexpr const char* kDatasetMagic = "UQTSC-DS-1";

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(ErrorKind::Io, path + ": truncated dataset file");
  }
  return value;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

SplitTag parse_split(const std::string& s) {
  if (s == "train") return SplitTag::Train;
  if (s == "val") return SplitTag::Val;
  if (s == "test") return SplitTag::Test;
  return SplitTag::None;
}

}  // namespace

void write_dataset(const SequenceDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  KeyValues header;
  header.set("channels", join(ds.channel_names));
  std::vector<std::string> groups;
  for (auto g : ds.groups) groups.emplace_back(g == ChannelGroup::Imu ? "imu" : "joint");
  header.set("groups", join(groups));
  header.set("window_length", static_cast<long>(ds.window_length));
  header.set("mode", std::string(ds.generation.mode == WindowMode::Sliding ? "sliding" : "subsample"));
  header.set("window", static_cast<long>(ds.generation.window));
  header.set("step", static_cast<long>(ds.generation.step));
  header.set("factor", static_cast<long>(ds.generation.factor));
  header.set("split", std::string(to_string(ds.split)));
  header.set("discarded_ties", static_cast<long>(ds.discarded_ties));
  header.set("count", static_cast<long>(ds.windows.size()));
  out << kDatasetMagic << '\n' << header.format() << "end\n";
  const std::size_t values_per_window = ds.channel_count() * ds.window_length;
  for (const auto& w : ds.windows) {
    if (w.values.size() != values_per_window) throw Error(ErrorKind::ShapeMismatch, "window size mismatch");
    put<std::int32_t>(out, w.label);
    put<std::uint64_t>(out, w.start_index);
    put<std::uint64_t>(out, w.stride);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(w.source_log_id.size()));
    out.write(w.source_log_id.data(), static_cast<std::streamsize>(w.source_log_id.size()));
    out.write(reinterpret_cast<const char*>(w.values.data()),
              static_cast<std::streamsize>(w.values.size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

SequenceDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != kDatasetMagic) throw Error(ErrorKind::Io, path + ": not a dataset file");
  std::string header_text;
  while (std::getline(in, line) && line != "end") header_text += line + '\n';
  const auto header = KeyValues::parse(header_text);

  SequenceDataset ds;
  const auto channels = header.get_string("channels");
  if (!channels.empty()) ds.channel_names = split(channels, ',');
  const auto groups = header.get_string("groups");
  if (!groups.empty()) {
    for (const auto& g : split(groups, ',')) ds.groups.push_back(g == "imu" ? ChannelGroup::Imu : ChannelGroup::Joint);
  }
  ds.window_length = static_cast<std::size_t>(header.get_int("window_length"));
  ds.generation.mode = header.get_string("mode") == "sliding" ? WindowMode::Sliding : WindowMode::Subsample;
  ds.generation.window = static_cast<std::size_t>(header.get_int("window"));
  ds.generation.step = static_cast<std::size_t>(header.get_int("step"));
  ds.generation.factor = static_cast<std::size_t>(header.get_int("factor"));
  ds.split = parse_split(header.get_string("split"));
  ds.discarded_ties = static_cast<std::size_t>(header.get_int("discarded_ties"));
  const auto count = static_cast<std::size_t>(header.get_int("count"));
  const std::size_t values_per_window = ds.channel_count() * ds.window_length;
  ds.windows.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Window w;
    w.label = get<std::int32_t>(in, path);
    w.start_index = get<std::uint64_t>(in, path);
    w.stride = get<std::uint64_t>(in, path);
    const auto id_len = get<std::uint32_t>(in, path);
    w.source_log_id.resize(id_len);
    in.read(w.source_log_id.data(), id_len);
    w.values.resize(values_per_window);
    if (!in.read(reinterpret_cast<char*>(w.values.data()),
                 static_cast<std::streamsize>(values_per_window * sizeof(double)))) {
      throw Error(ErrorKind::Io, path + ": truncated dataset file");
    }
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

void write_stats(const ChannelStats& stats, const std::vector<std::string>& names, const std::string& path) {
  KeyValues kv;
  for (std::size_t c = 0; c < stats.mean.size(); ++c) {
    const auto& n = c < names.size() ? names[c] : "ch" + std::to_string(c);
    kv.set("mean." + n, stats.mean[c]);
    kv.set("std." + n, stats.stddev[c]);
  }
  kv.write_file(path);
}

ChannelStats read_stats(const std::string& path) {
  const auto kv = KeyValues::read_file(path);
  ChannelStats stats;
  for (const auto& [k, v] : kv.entries()) {
    const auto value = parse_double(v);
    if (!value) throw Error(ErrorKind::Io, path + ": bad value for " + k);
    if (k.rfind("mean.", 0) == 0) stats.mean.push_back(*value);
    else if (k.rfind("std.", 0) == 0) stats.stddev.push_back(*value);
  }
  return stats;
}

}  // namespace uqtsc
