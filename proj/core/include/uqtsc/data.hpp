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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uqtsc {

// Terrain classes. Rock is uneven and undeformable, sand is even and deformable.
inline constexpr int kRock = 0;
inline constexpr int kSand = 1;
inline constexpr int kNumClasses = 2;

enum class ChannelGroup { Imu, Joint };

/// Canonical column names of the sensor-log CSV, in header order.
const std::vector<std::string>& imu_channel_names();
const std::vector<std::string>& joint_channel_names();

/// One contiguous multichannel recording with a per-timestep terrain label.
struct TimeSeriesLog {
  std::string log_id;
  double sample_rate_hz = 100.0;
  std::vector<std::string> channel_names;
  std::vector<ChannelGroup> groups;
  std::vector<std::vector<double>> channels;  // channel-major
  std::vector<int> labels;

  std::size_t length() const noexcept { return labels.size(); }
  std::size_t channel_count() const noexcept { return channels.size(); }
  std::size_t group_size(ChannelGroup g) const noexcept;
  bool has_group(ChannelGroup g) const noexcept { return group_size(g) > 0; }
  std::optional<std::size_t> channel_index(const std::string& name) const;

  /// Throws InvalidArgument when any structural invariant is broken.
  void validate() const;
};

enum class WindowMode { Sliding, Subsample };

struct Generation {
  WindowMode mode = WindowMode::Sliding;
  std::size_t window = 0;  // w, or target length when subsampling
  std::size_t step = 0;    // s; unused when subsampling
  std::size_t factor = 1;  // f; 1 when sliding
};

enum class SplitTag { None, Train, Val, Test };
const char* to_string(SplitTag tag);

struct Window {
  std::vector<double> values;  // channels x length, row-major
  int label = 0;
  std::string source_log_id;
  std::size_t start_index = 0;  // index of the first sample in the source log
  std::size_t stride = 1;       // distance between consecutive samples in the source log
};

struct SequenceDataset {
  std::vector<std::string> channel_names;
  std::vector<ChannelGroup> groups;
  std::size_t window_length = 0;
  Generation generation;
  SplitTag split = SplitTag::None;
  std::vector<Window> windows;
  std::size_t discarded_ties = 0;  // windows dropped because their label vote was 50/50

  std::size_t channel_count() const noexcept { return channel_names.size(); }
  std::size_t size() const noexcept { return windows.size(); }
  bool empty() const noexcept { return windows.empty(); }
  std::size_t class_count(int label) const noexcept;
  /// Appends another dataset with identical channel layout and window length.
  void append(const SequenceDataset& other);
};

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct ClassSignature {
  std::vector<double> resonance_hz;  // damped-oscillator centre frequencies
  double amplitude = 1.0;            // oscillator output standard deviation
  double roughness = 0.0;            // AR(1) coefficient of the roughness process
  double roughness_std = 0.1;        // stationary std of the roughness process
  double noise_std = 0.1;            // white sensor noise
  double wheel_speed = 1.0;          // rad/s
  double wheel_effort = 1.0;         // mean motor effort
  bool operator==(const ClassSignature&) const = default;
};

struct ClassSegment {
  int label = kRock;
  double duration_s = 0.0;
  double purity = 1.0;  // weight of the labelled signature; the rest comes from the other class
};

struct SynthSpec {
  std::string log_id = "synth";
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  double sample_rate_hz = 100.0;
  bool include_joints = true;
  std::vector<ClassSegment> class_segments;
  ClassSignature rock = default_rock();
  ClassSignature sand = default_sand();

  static ClassSignature default_rock();
  static ClassSignature default_sand();
  void validate() const;
};

struct LogSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

enum class ChannelMode { Imu, Joints, Fused };
ChannelMode parse_channel_mode(const std::string& text);
const char* to_string(ChannelMode mode);

TimeSeriesLog load_log(const std::string& path);
void write_log(const TimeSeriesLog& log, const std::string& path);

/// Manifest: one log path per line, '#' comments and blank lines ignored.
/// Relative paths resolve against the manifest's directory.
std::vector<std::string> read_manifest(const std::string& path);

/// Per-timestep activity used for idle detection: mean |wheel speed| when
/// joint data is present, else gyroscope magnitude.
std::vector<double> activity_signal(const TimeSeriesLog& log);

TimeSeriesLog trim_idle(const TimeSeriesLog& log, double speed_threshold, double min_gap_s);

/// Majority label over labels[first, last]; nullopt on an exact tie.
std::optional<int> majority_label(std::span<const int> labels, std::size_t first, std::size_t last);

std::size_t sliding_window_count(std::size_t length, std::size_t w, std::size_t s);

SequenceDataset slide_windows(const TimeSeriesLog& log, std::size_t w, std::size_t s);
SequenceDataset subsample(const TimeSeriesLog& log, std::size_t f, std::size_t target_length);

/// Copies `length` samples starting at `start` with the given stride.
std::vector<double> extract_window(const TimeSeriesLog& log, std::size_t start, std::size_t stride,
                                   std::size_t length);

LogSplit split_logs(const std::vector<TimeSeriesLog>& logs, double test_fraction,
                    double val_fraction, std::uint64_t seed);

ChannelStats fit_stats(const SequenceDataset& train);
SequenceDataset standardize(const SequenceDataset& ds, const ChannelStats& stats);

TimeSeriesLog select_channels(const TimeSeriesLog& log, ChannelMode mode);
SequenceDataset select_channels(const SequenceDataset& ds, ChannelMode mode);

TimeSeriesLog synth_generate(const SynthSpec& spec);

// Binary dataset files and text channel statistics.
void write_dataset(const SequenceDataset& ds, const std::string& path);
SequenceDataset read_dataset(const std::string& path);
void write_stats(const ChannelStats& stats, const std::vector<std::string>& names,
                 const std::string& path);
ChannelStats read_stats(const std::string& path);

}  // namespace uqtsc
