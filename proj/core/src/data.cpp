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
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "uqtsc/data.hpp"
#include "uqtsc/error.hpp"
#include "uqtsc/kv.hpp"
#include "uqtsc/rng.hpp"

namespace uqtsc {

const std::vector<std::string>& imu_channel_names() {
  static const std::vector<std::string> names = {"acc_x", "acc_y", "acc_z",
                                                 "gyr_x", "gyr_y", "gyr_z"};
  return names;
}

const std::vector<std::string>& joint_channel_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (int w = 0; w < 4; ++w) {
      for (const char* q : {"speed", "accel", "effort"}) {
        out.push_back("w" + std::to_string(w) + "_" + q);
      }
    }
    return out;
  }();
  return names;
}

const char* to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
    case SplitTag::None: break;
  }
  return "none";
}

ChannelMode parse_channel_mode(const std::string& text) {
  if (text == "imu") return ChannelMode::Imu;
  if (text == "joints") return ChannelMode::Joints;
  if (text == "fused") return ChannelMode::Fused;
  throw Error(ErrorKind::InvalidArgument, "unknown channel mode '" + text + "'");
}

const char* to_string(ChannelMode mode) {
  switch (mode) {
    case ChannelMode::Imu: return "imu";
    case ChannelMode::Joints: return "joints";
    case ChannelMode::Fused: return "fused";
  }
  return "?";
}

std::size_t TimeSeriesLog::group_size(ChannelGroup g) const noexcept {
  return static_cast<std::size_t>(std::count(groups.begin(), groups.end(), g));
}

std::optional<std::size_t> TimeSeriesLog::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < channel_names.size(); ++i) {
    if (channel_names[i] == name) return i;
  }
  return std::nullopt;
}

void TimeSeriesLog::validate() const {
  if (labels.empty()) throw Error(ErrorKind::EmptyLog, log_id + ": no samples");
  if (channel_names.size() != channels.size() || groups.size() != channels.size()) {
    throw Error(ErrorKind::InvalidArgument, log_id + ": channel metadata mismatch");
  }
  for (const auto& ch : channels) {
    if (ch.size() != labels.size()) {
      throw Error(ErrorKind::InvalidArgument, log_id + ": channel length differs from labels");
    }
  }
  const auto imu = group_size(ChannelGroup::Imu);
  const auto joint = group_size(ChannelGroup::Joint);
  if (imu != 0 && imu != 6) throw Error(ErrorKind::InvalidArgument, log_id + ": imu group must have 6 channels");
  if (joint != 0 && joint != 12) throw Error(ErrorKind::InvalidArgument, log_id + ": joint group must have 12 channels");
  for (int l : labels) {
    if (l != kRock && l != kSand) throw Error(ErrorKind::InvalidArgument, log_id + ": label outside {0,1}");
  }
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorKind::InvalidArgument, log_id + ": sample rate must be positive");
}

std::size_t SequenceDataset::class_count(int label) const noexcept {
  return static_cast<std::size_t>(std::count_if(windows.begin(), windows.end(),
                                                [label](const Window& w) { return w.label == label; }));
}

void SequenceDataset::append(const SequenceDataset& other) {
  if (windows.empty() && channel_names.empty()) {
    const auto split_tag = split;
    *this = other;
    split = split_tag;
    return;
  }
  if (other.channel_names != channel_names || other.window_length != window_length) {
    throw Error(ErrorKind::ShapeMismatch, "cannot append datasets with different layouts");
  }
  windows.insert(windows.end(), other.windows.begin(), other.windows.end());
  discarded_ties += other.discarded_ties;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::optional<ChannelGroup> group_of(const std::string& name) {
  const auto& imu = imu_channel_names();
  if (std::find(imu.begin(), imu.end(), name) != imu.end()) return ChannelGroup::Imu;
  const auto& joint = joint_channel_names();
  if (std::find(joint.begin(), joint.end(), name) != joint.end()) return ChannelGroup::Joint;
  return std::nullopt;
}

}  // namespace

TimeSeriesLog load_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);

  TimeSeriesLog log;
  log.log_id = std::filesystem::path(path).stem().string();

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyLog, path + ": missing header");
  const auto header = split(trim(line), ',');
  std::optional<std::size_t> t_col, label_col;
  std::vector<std::size_t> channel_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(trim(header[c]));
    if (name == "t") {
      t_col = c;
    } else if (name == "label") {
      label_col = c;
    } else if (auto g = group_of(name)) {
      if (log.channel_index(name)) throw Error(ErrorKind::InvalidArgument, path + ": duplicate column " + name);
      log.channel_names.push_back(name);
      log.groups.push_back(*g);
      channel_cols.push_back(c);
    } else {
      throw Error(ErrorKind::InvalidArgument, path + ": unknown column '" + name + "'");
    }
  }
  if (!t_col) throw Error(ErrorKind::MissingColumn, path + ": t");
  if (!label_col) throw Error(ErrorKind::MissingColumn, path + ": label");
  for (const auto& name : imu_channel_names()) {
    if (!log.channel_index(name)) throw Error(ErrorKind::MissingColumn, path + ": " + name);
  }
  if (log.has_group(ChannelGroup::Joint)) {
    for (const auto& name : joint_channel_names()) {
      if (!log.channel_index(name)) throw Error(ErrorKind::MissingColumn, path + ": " + name);
    }
  }
  log.channels.resize(channel_cols.size());

  std::vector<double> times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row_text = trim(line);
    if (row_text.empty()) continue;
    const auto row = split(row_text, ',');
    if (row.size() != header.size()) {
      throw Error(ErrorKind::RaggedRow, path + ": line " + std::to_string(line_no));
    }
    auto number = [&](std::size_t col) {
      const auto v = parse_double(row[col]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorKind::NonNumericValue,
                    path + ": line " + std::to_string(line_no) + ", column " + std::string(trim(header[col])));
      }
      return *v;
    };
    const double t = number(*t_col);
    if (!times.empty() && !(t > times.back())) {
      throw Error(ErrorKind::InvalidArgument, path + ": line " + std::to_string(line_no) + ": t not increasing");
    }
    times.push_back(t);
    const auto label = parse_long(row[*label_col]);
    if (!label) {
      throw Error(ErrorKind::NonNumericValue, path + ": line " + std::to_string(line_no) + ", column label");
    }
    if (*label != kRock && *label != kSand) {
      throw Error(ErrorKind::InvalidArgument, path + ": line " + std::to_string(line_no) + ": label outside {0,1}");
    }
    log.labels.push_back(static_cast<int>(*label));
    for (std::size_t i = 0; i < channel_cols.size(); ++i) log.channels[i].push_back(number(channel_cols[i]));
  }
  if (log.labels.empty()) throw Error(ErrorKind::EmptyLog, path + ": header only");
  if (times.size() >= 2) {
    log.sample_rate_hz = static_cast<double>(times.size() - 1) / (times.back() - times.front());
  }
  log.validate();
  return log;
}

void write_log(const TimeSeriesLog& log, const std::string& path) {
  log.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << "t";
  for (const auto& n : log.channel_names) out << ',' << n;
  out << ",label\n";
  char buf[32];
  for (std::size_t i = 0; i < log.length(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.2f", static_cast<double>(i) / log.sample_rate_hz);
    out << buf;
    for (const auto& ch : log.channels) {
      std::snprintf(buf, sizeof(buf), "%.6f", ch[i]);
      out << ',' << buf;
    }
    out << ',' << log.labels[i] << '\n';
  }
}

std::vector<std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open manifest " + path);
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto entry = trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    std::filesystem::path p{std::string(entry)};
    out.push_back((p.is_absolute() ? p : base / p).string());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trimming and windowing

std::vector<double> activity_signal(const TimeSeriesLog& log) {
  std::vector<double> act(log.length(), 0.0);
  std::vector<std::size_t> speeds;
  for (std::size_t c = 0; c < log.channel_count(); ++c) {
    const auto& n = log.channel_names[c];
    if (n.size() > 6 && n.compare(n.size() - 6, 6, "_speed") == 0) speeds.push_back(c);
  }
  if (!speeds.empty()) {
    for (std::size_t i = 0; i < log.length(); ++i) {
      double s = 0.0;
      for (auto c : speeds) s += std::abs(log.channels[c][i]);
      act[i] = s / static_cast<double>(speeds.size());
    }
    return act;
  }
  const auto gx = log.channel_index("gyr_x");
  const auto gy = log.channel_index("gyr_y");
  const auto gz = log.channel_index("gyr_z");
  if (!gx || !gy || !gz) throw Error(ErrorKind::MissingGroup, log.log_id + ": no activity channels");
  for (std::size_t i = 0; i < log.length(); ++i) {
    const double x = log.channels[*gx][i], y = log.channels[*gy][i], z = log.channels[*gz][i];
    act[i] = std::sqrt(x * x + y * y + z * z);
  }
  return act;
}

TimeSeriesLog trim_idle(const TimeSeriesLog& log, double speed_threshold, double min_gap_s) {
  const auto act = activity_signal(log);
  const auto min_steps = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(min_gap_s * log.sample_rate_hz - 1e-9)));

  std::vector<char> keep(log.length(), 1);
  bool any_active = false;
  std::size_t i = 0;
  while (i < log.length()) {
    if (act[i] >= speed_threshold) {
      any_active = true;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < log.length() && act[j] < speed_threshold) ++j;
    if (j - i >= min_steps) std::fill(keep.begin() + i, keep.begin() + j, 0);
    i = j;
  }
  if (!any_active) throw Error(ErrorKind::AllIdle, log.log_id);

  TimeSeriesLog out = log;
  out.labels.clear();
  for (auto& ch : out.channels) ch.clear();
  for (std::size_t k = 0; k < log.length(); ++k) {
    if (!keep[k]) continue;
    out.labels.push_back(log.labels[k]);
    for (std::size_t c = 0; c < log.channel_count(); ++c) out.channels[c].push_back(log.channels[c][k]);
  }
  return out;
}

std::optional<int> majority_label(std::span<const int> labels, std::size_t first, std::size_t last) {
  std::size_t sand = 0;
  for (std::size_t i = first; i <= last; ++i) sand += labels[i] == kSand;
  const std::size_t n = last - first + 1;
  if (2 * sand == n) return std::nullopt;
  return 2 * sand > n ? kSand : kRock;
}

std::size_t sliding_window_count(std::size_t length, std::size_t w, std::size_t s) {
  if (w == 0 || s == 0) throw Error(ErrorKind::InvalidArgument, "window and step must be >= 1");
  return length < w ? 0 : (length - w) / s + 1;
}

std::vector<double> extract_window(const TimeSeriesLog& log, std::size_t start, std::size_t stride,
                                   std::size_t length) {
  std::vector<double> values(log.channel_count() * length);
  for (std::size_t c = 0; c < log.channel_count(); ++c) {
    const auto& ch = log.channels[c];
    for (std::size_t t = 0; t < length; ++t) values[c * length + t] = ch[start + t * stride];
  }
  return values;
}

namespace {

SequenceDataset empty_like(const TimeSeriesLog& log, std::size_t length, Generation gen) {
  SequenceDataset ds;
  ds.channel_names = log.channel_names;
  ds.groups = log.groups;
  ds.window_length = length;
  ds.generation = gen;
  return ds;
}

}  // namespace

SequenceDataset slide_windows(const TimeSeriesLog& log, std::size_t w, std::size_t s) {
  const auto n = sliding_window_count(log.length(), w, s);
  auto ds = empty_like(log, w, Generation{WindowMode::Sliding, w, s, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = i * s;
    const auto label = majority_label(log.labels, start, start + w - 1);
    if (!label) {
      ++ds.discarded_ties;
      continue;
    }
    ds.windows.push_back(Window{extract_window(log, start, 1, w), *label, log.log_id, start, 1});
  }
  return ds;
}

SequenceDataset subsample(const TimeSeriesLog& log, std::size_t f, std::size_t target_length) {
  if (f < 2) throw Error(ErrorKind::InvalidArgument, "subsampling factor must be >= 2");
  if (target_length < 1) throw Error(ErrorKind::InvalidArgument, "target length must be >= 1");
  auto ds = empty_like(log, target_length, Generation{WindowMode::Subsample, target_length, 0, f});
  const std::size_t len = log.length();
  bool any = false;
  for (std::size_t phase = 0; phase < f && phase < len; ++phase) {
    const std::size_t stream_len = (len - phase + f - 1) / f;
    const std::size_t count = stream_len / target_length;
    any = any || count > 0;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t start = phase + k * target_length * f;
      const std::size_t last = start + (target_length - 1) * f;
      const auto label = majority_label(log.labels, start, last);
      if (!label) {
        ++ds.discarded_ties;
        continue;
      }
      ds.windows.push_back(Window{extract_window(log, start, f, target_length), *label, log.log_id, start, f});
    }
  }
  if (!any) {
    throw Error(ErrorKind::TooShort, log.log_id + ": no decimated stream reaches length " +
                                         std::to_string(target_length));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Splits and standardization

LogSplit split_logs(const std::vector<TimeSeriesLog>& logs, double test_fraction, double val_fraction,
                    std::uint64_t seed) {
  if (logs.size() < 3) throw Error(ErrorKind::TooFewLogs, "need at least 3 logs, got " + std::to_string(logs.size()));
  if (!(test_fraction > 0.0 && test_fraction < 1.0) || !(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "split fractions must lie in (0,1)");
  }
  std::vector<std::size_t> order(logs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());

  double total = 0.0;
  for (const auto& l : logs) total += static_cast<double>(l.length());

  LogSplit split;
  std::size_t next = 0;
  // Greedy: keep adding whole logs while the running timestep share is below target.
  double test_steps = 0.0;
  const double test_target = test_fraction * total;
  while (next < order.size() - 2 && test_steps < test_target) {
    test_steps += static_cast<double>(logs[order[next]].length());
    split.test.push_back(logs[order[next++]].log_id);
  }
  const double val_target = val_fraction * (total - test_steps);
  double val_steps = 0.0;
  while (next < order.size() - 1 && val_steps < val_target) {
    val_steps += static_cast<double>(logs[order[next]].length());
    split.val.push_back(logs[order[next++]].log_id);
  }
  while (next < order.size()) split.train.push_back(logs[order[next++]].log_id);
  return split;
}

ChannelStats fit_stats(const SequenceDataset& train) {
  if (train.empty()) throw Error(ErrorKind::EmptyDataset, "cannot fit statistics on an empty dataset");
  const auto channels = train.channel_count();
  const auto len = train.window_length;
  ChannelStats stats;
  stats.mean.assign(channels, 0.0);
  stats.stddev.assign(channels, 0.0);
  const double n = static_cast<double>(train.size() * len);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (const auto& w : train.windows) {
      for (std::size_t t = 0; t < len; ++t) sum += w.values[c * len + t];
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& w : train.windows) {
      for (std::size_t t = 0; t < len; ++t) {
        const double d = w.values[c * len + t] - mean;
        ss += d * d;
      }
    }
    const double sd = std::sqrt(ss / n);
    stats.mean[c] = mean;
    stats.stddev[c] = sd < 1e-12 ? 1.0 : sd;
  }
  return stats;
}

SequenceDataset standardize(const SequenceDataset& ds, const ChannelStats& stats) {
  if (stats.mean.size() != ds.channel_count() || stats.stddev.size() != ds.channel_count()) {
    throw Error(ErrorKind::ShapeMismatch, "statistics channel count differs from dataset");
  }
  SequenceDataset out = ds;
  const auto len = ds.window_length;
  for (auto& w : out.windows) {
    for (std::size_t c = 0; c < ds.channel_count(); ++c) {
      for (std::size_t t = 0; t < len; ++t) {
        auto& v = w.values[c * len + t];
        v = (v - stats.mean[c]) / stats.stddev[c];
      }
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> channels_for(const std::vector<ChannelGroup>& groups, ChannelMode mode,
                                      const std::string& what) {
  std::vector<std::size_t> imu, joint;
  for (std::size_t i = 0; i < groups.size(); ++i) (groups[i] == ChannelGroup::Imu ? imu : joint).push_back(i);
  const bool need_imu = mode != ChannelMode::Joints;
  const bool need_joint = mode != ChannelMode::Imu;
  if (need_imu && imu.empty()) throw Error(ErrorKind::MissingGroup, what + ": no imu channels");
  if (need_joint && joint.empty()) throw Error(ErrorKind::MissingGroup, what + ": no joint channels");
  std::vector<std::size_t> out;
  if (need_imu) out.insert(out.end(), imu.begin(), imu.end());
  if (need_joint) out.insert(out.end(), joint.begin(), joint.end());
  return out;
}

}  // namespace

TimeSeriesLog select_channels(const TimeSeriesLog& log, ChannelMode mode) {
  const auto idx = channels_for(log.groups, mode, log.log_id);
  TimeSeriesLog out;
  out.log_id = log.log_id;
  out.sample_rate_hz = log.sample_rate_hz;
  out.labels = log.labels;
  for (auto i : idx) {
    out.channel_names.push_back(log.channel_names[i]);
    out.groups.push_back(log.groups[i]);
    out.channels.push_back(log.channels[i]);
  }
  return out;
}

SequenceDataset select_channels(const SequenceDataset& ds, ChannelMode mode) {
  const auto idx = channels_for(ds.groups, mode, "dataset");
  SequenceDataset out = ds;
  out.channel_names.clear();
  out.groups.clear();
  for (auto i : idx) {
    out.channel_names.push_back(ds.channel_names[i]);
    out.groups.push_back(ds.groups[i]);
  }
  const auto len = ds.window_length;
  for (std::size_t k = 0; k < ds.windows.size(); ++k) {
    auto& values = out.windows[k].values;
    values.assign(idx.size() * len, 0.0);
    for (std::size_t c = 0; c < idx.size(); ++c) {
      std::copy_n(ds.windows[k].values.begin() + static_cast<std::ptrdiff_t>(idx[c] * len), len,
                  values.begin() + static_cast<std::ptrdiff_t>(c * len));
    }
  }
  return out;
}

}  // namespace uqtsc
