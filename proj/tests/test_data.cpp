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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <set>

#include "test_util.hpp"
#include "uqtsc/data.hpp"

using namespace uqtsc;
using uqtsc::testing::TempDir;
using uqtsc::testing::write_text;

namespace {

const char* kImuHeader = "t,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z,label\n";

std::vector<std::size_t> brute_force_starts(std::size_t L, std::size_t w, std::size_t s) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + w <= L; i += s) starts.push_back(i);
  return starts;
}

}  // namespace

TEST(LoadLog, ThreeRowImuFile) {
  TempDir dir;
  write_text(dir.file("a.csv"), std::string(kImuHeader) +
                                    "0.00,1,2,3,4,5,6,0\n"
                                    "0.01,1,2,3,4,5,6,1\n"
                                    "0.02,1,2,3,4,5,6.5,1\n");
  const auto log = load_log(dir.file("a.csv"));
  EXPECT_EQ(log.length(), 3u);
  EXPECT_EQ(log.group_size(ChannelGroup::Imu), 6u);
  EXPECT_EQ(log.group_size(ChannelGroup::Joint), 0u);
  EXPECT_DOUBLE_EQ(log.channels[5][2], 6.5);
  EXPECT_EQ(log.labels, (std::vector<int>{0, 1, 1}));
  EXPECT_NEAR(log.sample_rate_hz, 100.0, 1e-9);
}

TEST(LoadLog, HeaderOnlyIsEmptyLog) {
  TempDir dir;
  write_text(dir.file("a.csv"), kImuHeader);
  EXPECT_UQ_ERROR(load_log(dir.file("a.csv")), EmptyLog);
}

TEST(LoadLog, MissingLabelColumn) {
  TempDir dir;
  write_text(dir.file("a.csv"), "t,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z\n0,1,2,3,4,5,6\n");
  EXPECT_UQ_ERROR(load_log(dir.file("a.csv")), MissingColumn);
}

TEST(LoadLog, RaggedAndNonNumericRows) {
  TempDir dir;
  write_text(dir.file("r.csv"), std::string(kImuHeader) + "0,1,2,3,4,5,6,0\n0.01,1,2,3\n");
  EXPECT_UQ_ERROR(load_log(dir.file("r.csv")), RaggedRow);
  write_text(dir.file("n.csv"), std::string(kImuHeader) + "0,1,2,x,4,5,6,0\n");
  EXPECT_UQ_ERROR(load_log(dir.file("n.csv")), NonNumericValue);
}

TEST(LoadLog, RoundTripThroughWriter) {
  TempDir dir;
  SynthSpec spec;
  spec.seed = 3;
  spec.duration_s = 2.0;
  spec.class_segments = {{kRock, 1.0}, {kSand, 1.0}};
  const auto log = synth_generate(spec);
  write_log(log, dir.file("s.csv"));
  const auto back = load_log(dir.file("s.csv"));
  ASSERT_EQ(back.channel_names, log.channel_names);
  ASSERT_EQ(back.labels, log.labels);
  for (std::size_t c = 0; c < log.channel_count(); ++c) {
    for (std::size_t t = 0; t < log.length(); ++t) EXPECT_NEAR(back.channels[c][t], log.channels[c][t], 5e-7);
  }
}

TEST(TrimIdle, AllIdleLog) {
  auto log = uqtsc::testing::constant_label_log("idle", 500, kRock, 1);
  for (std::size_t c = 3; c < 6; ++c) std::fill(log.channels[c].begin(), log.channels[c].end(), 0.0);
  EXPECT_UQ_ERROR(trim_idle(log, 0.1, 1.0), AllIdle);
}

TEST(TrimIdle, NoLongGapIsIdentity) {
  auto log = uqtsc::testing::constant_label_log("busy", 500, kRock, 1);
  for (std::size_t c = 3; c < 6; ++c) std::fill(log.channels[c].begin(), log.channels[c].end(), 1.0);
  // 50 quiet steps, shorter than the 1 s gap.
  for (std::size_t c = 3; c < 6; ++c) std::fill(log.channels[c].begin() + 100, log.channels[c].begin() + 150, 0.0);
  const auto out = trim_idle(log, 0.5, 1.0);
  EXPECT_EQ(out.length(), 500u);
  EXPECT_EQ(out.channels, log.channels);
}

TEST(TrimIdle, RemovesTwoHundredStepGap) {
  std::vector<int> labels(1000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i < 500 ? kRock : kSand;
  auto log = uqtsc::testing::random_imu_log("gap", labels, 2);
  for (std::size_t c = 3; c < 6; ++c) {
    for (std::size_t t = 0; t < 1000; ++t) log.channels[c][t] = (t >= 400 && t < 600) ? 0.0 : 1.0;
  }
  const auto out = trim_idle(log, 0.5, 1.0);
  ASSERT_EQ(out.length(), 800u);
  // Brute-force oracle: the kept indices are [0,400) and [600,1000), labels aligned.
  std::vector<std::size_t> kept;
  for (std::size_t t = 0; t < 1000; ++t) {
    if (t < 400 || t >= 600) kept.push_back(t);
  }
  for (std::size_t i = 0; i < kept.size(); ++i) {
    EXPECT_EQ(out.labels[i], labels[kept[i]]);
    EXPECT_EQ(out.channels[0][i], log.channels[0][kept[i]]);
  }
}

TEST(SlideWindows, CountExamples) {
  EXPECT_EQ(sliding_window_count(1000, 400, 100), 7u);
  EXPECT_EQ(sliding_window_count(100, 100, 25), 1u);
  EXPECT_EQ(sliding_window_count(99, 100, 25), 0u);
  const auto log = uqtsc::testing::constant_label_log("a", 1000, kSand, 4);
  const auto ds = slide_windows(log, 400, 100);
  ASSERT_EQ(ds.size(), 7u);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(ds.windows[i].start_index, i * 100);
    EXPECT_EQ(ds.windows[i].label, kSand);
    EXPECT_EQ(ds.windows[i].values.size(), 6u * 400u);
  }
  EXPECT_TRUE(slide_windows(uqtsc::testing::constant_label_log("b", 99, kRock, 4), 100, 25).empty());
}

TEST(SlideWindows, FormulaMatchesBruteForceEnumeration) {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto L = static_cast<std::size_t>(rng.uniform_int(1, 10000));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, static_cast<long>(L)));
    const auto s = static_cast<std::size_t>(rng.uniform_int(1, static_cast<long>(L)));
    ASSERT_EQ(sliding_window_count(L, w, s), brute_force_starts(L, w, s).size()) << L << " " << w << " " << s;
  }
}

TEST(SlideWindows, MajorityLabelAndTies) {
  std::vector<int> labels(8, kRock);
  std::fill(labels.begin() + 4, labels.end(), kSand);
  const auto log = uqtsc::testing::random_imu_log("m", labels, 5);
  // w=4, s=2: starts 0,2,4 -> rock, tie (dropped), sand.
  const auto ds = slide_windows(log, 4, 2);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.discarded_ties, 1u);
  EXPECT_EQ(ds.windows[0].label, kRock);
  EXPECT_EQ(ds.windows[1].label, kSand);
  EXPECT_EQ(majority_label(labels, 0, 7), std::nullopt);
  EXPECT_EQ(majority_label(labels, 0, 4), kRock);
}

TEST(SlideWindows, WindowsReconstructFromSource) {
  const auto log = uqtsc::testing::constant_label_log("r", 731, kRock, 6);
  const auto ds = slide_windows(log, 100, 37);
  for (const auto& w : ds.windows) {
    EXPECT_EQ(w.source_log_id, "r");
    EXPECT_EQ(extract_window(log, w.start_index, w.stride, 100), w.values);
  }
}

TEST(Subsample, OneWindowPerPhase) {
  const auto log = uqtsc::testing::constant_label_log("s", 1000, kRock, 7);
  const auto ds = subsample(log, 8, 125);
  ASSERT_EQ(ds.size(), 8u);
  for (std::size_t p = 0; p < 8; ++p) {
    EXPECT_EQ(ds.windows[p].start_index, p);
    EXPECT_EQ(ds.windows[p].stride, 8u);
    EXPECT_EQ(extract_window(log, p, 8, 125), ds.windows[p].values);
  }
}

TEST(Subsample, TooShortAndCounting) {
  const auto log = uqtsc::testing::constant_label_log("s", 1000, kRock, 7);
  EXPECT_UQ_ERROR(subsample(log, 32, 125), TooShort);
  const auto longer = uqtsc::testing::constant_label_log("l", 2000, kSand, 8);
  EXPECT_EQ(subsample(longer, 16, 100).size(), 16u);
}

TEST(Subsample, EveryIndexUsedByExactlyOnePhase) {
  const std::size_t L = 1003, f = 16;
  std::vector<int> owner(L, -1);
  for (std::size_t p = 0; p < f; ++p) {
    for (std::size_t i = p; i < L; i += f) {
      ASSERT_EQ(owner[i], -1);
      owner[i] = static_cast<int>(p);
    }
  }
  EXPECT_TRUE(std::none_of(owner.begin(), owner.end(), [](int o) { return o < 0; }));
  // Windows from different phases never share a source index.
  const auto ds = subsample(uqtsc::testing::constant_label_log("p", L, kRock, 1), f, 30);
  std::set<std::size_t> used;
  for (const auto& w : ds.windows) {
    for (std::size_t k = 0; k < 30; ++k) EXPECT_TRUE(used.insert(w.start_index + k * w.stride).second);
  }
}

TEST(SplitLogs, TenEqualLogs) {
  std::vector<TimeSeriesLog> logs;
  for (int i = 0; i < 10; ++i) logs.push_back(uqtsc::testing::constant_label_log("log" + std::to_string(i), 100, 0, i));
  const auto split = split_logs(logs, 0.3, 0.2, 42);
  EXPECT_EQ(split.train.size(), 5u);
  EXPECT_EQ(split.val.size(), 2u);
  EXPECT_EQ(split.test.size(), 3u);
  std::set<std::string> all(split.train.begin(), split.train.end());
  all.insert(split.val.begin(), split.val.end());
  all.insert(split.test.begin(), split.test.end());
  EXPECT_EQ(all.size(), 10u);
  const auto again = split_logs(logs, 0.3, 0.2, 42);
  EXPECT_EQ(again.train, split.train);
  EXPECT_EQ(again.val, split.val);
  EXPECT_EQ(again.test, split.test);
}

TEST(SplitLogs, TooFewLogs) {
  std::vector<TimeSeriesLog> logs = {uqtsc::testing::constant_label_log("a", 10, 0, 1),
                                     uqtsc::testing::constant_label_log("b", 10, 0, 2)};
  EXPECT_UQ_ERROR(split_logs(logs, 0.3, 0.2, 1), TooFewLogs);
}

TEST(SplitLogs, UnequalLengthsWithinOneLogOfTarget) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TimeSeriesLog> logs;
    std::size_t total = 0, longest = 0;
    const auto n = rng.uniform_int(3, 15);
    for (long i = 0; i < n; ++i) {
      const auto len = static_cast<std::size_t>(rng.uniform_int(50, 500));
      total += len;
      longest = std::max(longest, len);
      logs.push_back(uqtsc::testing::constant_label_log("l" + std::to_string(i), len, 0, static_cast<std::uint64_t>(i)));
    }
    const auto split = split_logs(logs, 0.3, 0.2, static_cast<std::uint64_t>(trial));
    ASSERT_FALSE(split.train.empty());
    ASSERT_FALSE(split.val.empty());
    ASSERT_FALSE(split.test.empty());
    std::size_t test_steps = 0;
    for (const auto& id : split.test) {
      for (const auto& l : logs) {
        if (l.log_id == id) test_steps += l.length();
      }
    }
    EXPECT_LE(std::abs(static_cast<double>(test_steps) - 0.3 * static_cast<double>(total)),
              static_cast<double>(longest));
  }
}

TEST(Standardize, ChannelOneTwoThree) {
  SequenceDataset ds;
  ds.channel_names = {"acc_x"};
  ds.groups = {ChannelGroup::Imu};
  ds.window_length = 3;
  ds.windows.push_back(Window{{1.0, 2.0, 3.0}, 0, "a", 0, 1});
  const auto stats = fit_stats(ds);
  EXPECT_NEAR(stats.mean[0], 2.0, 1e-12);
  EXPECT_NEAR(stats.stddev[0], std::sqrt(2.0 / 3.0), 1e-12);
}

TEST(Standardize, ConstantChannelFloorsToOne) {
  SequenceDataset ds;
  ds.channel_names = {"acc_x"};
  ds.groups = {ChannelGroup::Imu};
  ds.window_length = 4;
  ds.windows.push_back(Window{{5, 5, 5, 5}, 0, "a", 0, 1});
  const auto stats = fit_stats(ds);
  EXPECT_EQ(stats.stddev[0], 1.0);
  const auto z = standardize(ds, stats);
  for (double v : z.windows[0].values) EXPECT_EQ(v, 0.0);
}

TEST(Standardize, TrainSplitMomentsAndIdempotence) {
  const auto log = uqtsc::testing::constant_label_log("z", 2000, kRock, 12);
  auto ds = slide_windows(log, 100, 50);
  for (auto& w : ds.windows) {
    for (auto& v : w.values) v = 3.0 * v + 7.0;
  }
  const auto z = standardize(ds, fit_stats(ds));
  const auto stats = fit_stats(z);
  for (std::size_t c = 0; c < z.channel_count(); ++c) {
    EXPECT_LT(std::abs(stats.mean[c]), 1e-9);
    EXPECT_NEAR(stats.stddev[c], 1.0, 1e-6);
  }
  const auto zz = standardize(z, stats);
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t k = 0; k < z.windows[i].values.size(); ++k) {
      EXPECT_NEAR(zz.windows[i].values[k], z.windows[i].values[k], 1e-6);
    }
  }
}

TEST(Standardize, EmptyTrainSet) {
  SequenceDataset ds;
  EXPECT_UQ_ERROR(fit_stats(ds), EmptyDataset);
}

TEST(SelectChannels, ModesAndMissingGroup) {
  SynthSpec spec;
  spec.duration_s = 1.0;
  spec.class_segments = {{kRock, 1.0}};
  const auto fused = synth_generate(spec);
  EXPECT_EQ(select_channels(fused, ChannelMode::Imu).channel_count(), 6u);
  EXPECT_EQ(select_channels(fused, ChannelMode::Joints).channel_count(), 12u);
  const auto all = select_channels(fused, ChannelMode::Fused);
  ASSERT_EQ(all.channel_count(), 18u);
  EXPECT_EQ(all.channel_names.front(), "acc_x");
  EXPECT_EQ(all.channel_names.back(), "w3_effort");
  const auto imu = select_channels(fused, ChannelMode::Imu);
  EXPECT_UQ_ERROR(select_channels(imu, ChannelMode::Joints), MissingGroup);
}

TEST(Synth, DeterministicAndDurationArithmetic) {
  SynthSpec spec;
  spec.seed = 17;
  spec.duration_s = 120.0;
  spec.class_segments = {{kRock, 60.0}, {kSand, 60.0}};
  const auto a = synth_generate(spec);
  const auto b = synth_generate(spec);
  EXPECT_EQ(a.length(), 12000u);
  EXPECT_EQ(a.channels, b.channels);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.labels[5999], kRock);
  EXPECT_EQ(a.labels[6000], kSand);
}

TEST(Synth, InvalidSpecs) {
  SynthSpec spec;
  spec.duration_s = 0.0;
  EXPECT_UQ_ERROR(spec.validate(), InvalidSpec);
  spec.duration_s = 10.0;
  spec.class_segments = {{kRock, 4.0}};
  EXPECT_UQ_ERROR(spec.validate(), InvalidSpec);
  spec.class_segments = {{kRock, 5.0, 0.5}, {kSand, 5.0}};
  EXPECT_UQ_ERROR(spec.validate(), InvalidSpec);
  spec.class_segments = {{kRock, 5.0, 1.01}, {kSand, 5.0}};
  EXPECT_UQ_ERROR(spec.validate(), InvalidSpec);
  spec.class_segments = {{kRock, 5.0}, {kSand, 5.0}};
  spec.sand = spec.rock;
  EXPECT_UQ_ERROR(spec.validate(), InvalidSpec);
}

namespace {

// Mean periodogram power above `cutoff` Hz, averaged over 256-sample chunks (naive DFT).
double high_band_power(const std::vector<double>& x, std::size_t begin, std::size_t end, double rate, double cutoff) {
  constexpr std::size_t N = 256;
  const double pi = std::acos(-1.0);
  double total = 0.0;
  int chunks = 0;
  for (std::size_t s = begin; s + N <= end; s += N) {
    double mean = 0.0;
    for (std::size_t i = 0; i < N; ++i) mean += x[s + i];
    mean /= N;
    for (std::size_t k = 1; k < N / 2; ++k) {
      if (static_cast<double>(k) * rate / N <= cutoff) continue;
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < N; ++i) acc += (x[s + i] - mean) * std::polar(1.0, -2.0 * pi * k * i / N);
      total += std::norm(acc) / N;
    }
    ++chunks;
  }
  return total / chunks;
}

}  // namespace

TEST(Synth, RockHasTwiceTheHighBandPower) {
  SynthSpec spec;
  spec.seed = 5;
  spec.duration_s = 120.0;
  spec.class_segments = {{kRock, 60.0}, {kSand, 60.0}};
  const auto log = synth_generate(spec);
  for (const char* ch : {"acc_x", "acc_y", "acc_z"}) {
    const auto& x = log.channels[*log.channel_index(ch)];
    const double rock = high_band_power(x, 0, 6000, 100.0, 10.0);
    const double sand = high_band_power(x, 6000, 12000, 100.0, 10.0);
    EXPECT_GE(rock / sand, 2.0) << ch;
  }
}

TEST(Synth, ImpureSegmentSitsBetweenClasses) {
  SynthSpec spec;
  spec.seed = 5;
  spec.duration_s = 180.0;
  spec.class_segments = {{kRock, 60.0}, {kRock, 60.0, 0.6}, {kSand, 60.0}};
  const auto log = synth_generate(spec);
  const auto& x = log.channels[*log.channel_index("acc_x")];
  const double pure = high_band_power(x, 0, 6000, 100.0, 10.0);
  const double mixed = high_band_power(x, 6000, 12000, 100.0, 10.0);
  const double sand = high_band_power(x, 12000, 18000, 100.0, 10.0);
  EXPECT_LT(mixed, pure);
  EXPECT_GT(mixed, sand);
  EXPECT_EQ(log.labels[9000], kRock);
}

TEST(Synth, FullPurityMatchesDefault) {
  SynthSpec a;
  a.seed = 9;
  a.duration_s = 20.0;
  a.class_segments = {{kRock, 10.0}, {kSand, 10.0}};
  SynthSpec b = a;
  b.class_segments = {{kRock, 10.0, 1.0}, {kSand, 10.0, 1.0}};
  EXPECT_EQ(synth_generate(a).channels, synth_generate(b).channels);
}

TEST(DatasetIo, RoundTrip) {
  TempDir dir;
  auto ds = slide_windows(uqtsc::testing::constant_label_log("a", 300, kSand, 3), 100, 50);
  ds.split = SplitTag::Val;
  write_dataset(ds, dir.file("val.ds"));
  const auto back = read_dataset(dir.file("val.ds"));
  EXPECT_EQ(back.channel_names, ds.channel_names);
  EXPECT_EQ(back.window_length, ds.window_length);
  EXPECT_EQ(back.split, SplitTag::Val);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.windows[i].values, ds.windows[i].values);
    EXPECT_EQ(back.windows[i].start_index, ds.windows[i].start_index);
    EXPECT_EQ(back.windows[i].source_log_id, "a");
  }
}
