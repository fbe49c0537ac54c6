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

#include <cmath>
#include <numbers>

#include "uqtsc/data.hpp"
#include "uqtsc/error.hpp"
#include "uqtsc/rng.hpp"

namespace uqtsc {

ClassSignature SynthSpec::default_rock() {
  ClassSignature s;
  s.resonance_hz = {3.0, 14.0, 23.0};
  s.amplitude = 0.6;
  s.roughness = -0.5;
  s.roughness_std = 0.3;
  s.noise_std = 0.3;
  s.wheel_speed = 1.2;
  s.wheel_effort = 1.0;
  return s;
}

ClassSignature SynthSpec::default_sand() {
  ClassSignature s;
  s.resonance_hz = {1.5, 4.0};
  s.amplitude = 0.6;
  s.roughness = 0.95;
  s.roughness_std = 0.3;
  s.noise_std = 0.3;
  s.wheel_speed = 0.9;
  s.wheel_effort = 1.6;
  return s;
}

namespace {

void check_signature(const ClassSignature& s, double rate, const char* name) {
  const std::string what = std::string(name) + " signature: ";
  if (s.resonance_hz.empty()) throw Error(ErrorKind::InvalidSpec, what + "no resonances");
  for (double f : s.resonance_hz) {
    if (!(f > 0.0 && f < rate / 2.0)) throw Error(ErrorKind::InvalidSpec, what + "resonance outside (0, Nyquist)");
  }
  if (!(s.amplitude >= 0.0) || !(s.roughness_std >= 0.0) || !(s.noise_std >= 0.0)) {
    throw Error(ErrorKind::InvalidSpec, what + "negative amplitude or std");
  }
  if (!(std::abs(s.roughness) < 1.0)) throw Error(ErrorKind::InvalidSpec, what + "roughness must satisfy |a| < 1");
}

// Noise-driven second-order resonator y_t = a1 y_{t-1} + a2 y_{t-2} + g e_t.
// Pole radius sets the damping; gain g normalises the stationary std to 1.
struct Resonator {
  double a1 = 0.0, a2 = 0.0, gain = 0.0;
  double y1 = 0.0, y2 = 0.0;

  void tune(double freq_hz, double rate_hz) {
    constexpr double kPoleRadius = 0.96;
    const double theta = 2.0 * std::numbers::pi * freq_hz / rate_hz;
    a1 = 2.0 * kPoleRadius * std::cos(theta);
    a2 = -kPoleRadius * kPoleRadius;
    const double var = (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1));
    gain = 1.0 / std::sqrt(var);
  }

  double step(double e) {
    const double y = a1 * y1 + a2 * y2 + gain * e;
    y2 = y1;
    y1 = y;
    return y;
  }
};

struct Ar1 {
  double value = 0.0;
  double step(double coef, double stddev, double e) {
    value = coef * value + stddev * std::sqrt(1.0 - coef * coef) * e;
    return value;
  }
};

}  // namespace

void SynthSpec::validate() const {
  if (!(duration_s > 0.0)) throw Error(ErrorKind::InvalidSpec, "duration must be positive");
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorKind::InvalidSpec, "sample rate must be positive");
  if (class_segments.empty()) throw Error(ErrorKind::InvalidSpec, "no class segments");
  double total = 0.0;
  for (const auto& seg : class_segments) {
    if (seg.label != kRock && seg.label != kSand) throw Error(ErrorKind::InvalidSpec, "segment label outside {0,1}");
    if (!(seg.duration_s > 0.0)) throw Error(ErrorKind::InvalidSpec, "segment duration must be positive");
    if (!(seg.purity > 0.5 && seg.purity <= 1.0)) throw Error(ErrorKind::InvalidSpec, "segment purity outside (0.5, 1]");
    total += seg.duration_s;
  }
  if (std::abs(total - duration_s) > 1e-6 * std::max(1.0, duration_s)) {
    throw Error(ErrorKind::InvalidSpec, "segment durations do not sum to duration_s");
  }
  check_signature(rock, sample_rate_hz, "rock");
  check_signature(sand, sample_rate_hz, "sand");
  if (rock == sand) throw Error(ErrorKind::InvalidSpec, "class signatures must differ");
}

TimeSeriesLog synth_generate(const SynthSpec& spec) {
  spec.validate();
  const double rate = spec.sample_rate_hz;
  const auto total_steps = static_cast<std::size_t>(std::llround(spec.duration_s * rate));

  TimeSeriesLog log;
  log.log_id = spec.log_id;
  log.sample_rate_hz = rate;
  for (const auto& n : imu_channel_names()) {
    log.channel_names.push_back(n);
    log.groups.push_back(ChannelGroup::Imu);
  }
  if (spec.include_joints) {
    for (const auto& n : joint_channel_names()) {
      log.channel_names.push_back(n);
      log.groups.push_back(ChannelGroup::Joint);
    }
  }
  log.channels.assign(log.channel_names.size(), std::vector<double>(total_steps, 0.0));
  log.labels.assign(total_steps, kRock);

  std::vector<double> purity(total_steps, 1.0);
  {
    double t_end = 0.0;
    std::size_t begin = 0;
    for (const auto& seg : spec.class_segments) {
      t_end += seg.duration_s;
      const auto end = std::min(total_steps, static_cast<std::size_t>(std::llround(t_end * rate)));
      std::fill(log.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                log.labels.begin() + static_cast<std::ptrdiff_t>(end), seg.label);
      std::fill(purity.begin() + static_cast<std::ptrdiff_t>(begin), purity.begin() + static_cast<std::ptrdiff_t>(end),
                seg.purity);
      begin = end;
    }
  }

  Rng rng(spec.seed);
  constexpr std::size_t kImu = 6;
  constexpr std::size_t kMaxRes = 8;
  // Resonator banks per IMU channel for the labelled class and, in impure
  // segments, for the other class. Retuned whenever the class changes.
  std::vector<std::vector<Resonator>> banks(kImu, std::vector<Resonator>(kMaxRes));
  std::vector<std::vector<Resonator>> other_banks(kImu, std::vector<Resonator>(kMaxRes));
  std::vector<Ar1> rough(kImu), other_rough(kImu);
  std::vector<Ar1> wheel_slip(4), wheel_load(4);
  std::vector<double> prev_speed(4, 0.0);
  int current = -1;

  auto vibration_of = [&](const ClassSignature& sig, std::vector<Resonator>& bank, Ar1& ar) {
    const std::size_t n_res = std::min(sig.resonance_hz.size(), kMaxRes);
    const double per_res = sig.amplitude / std::sqrt(static_cast<double>(n_res));
    double v = 0.0;
    for (std::size_t r = 0; r < n_res; ++r) v += per_res * bank[r].step(rng.normal());
    v += ar.step(sig.roughness, sig.roughness_std, rng.normal());
    return v;
  };

  for (std::size_t i = 0; i < total_steps; ++i) {
    const int label = log.labels[i];
    const ClassSignature& sig = label == kRock ? spec.rock : spec.sand;
    const ClassSignature& other = label == kRock ? spec.sand : spec.rock;
    if (label != current) {
      for (std::size_t c = 0; c < kImu; ++c) {
        for (std::size_t r = 0; r < sig.resonance_hz.size() && r < kMaxRes; ++r) banks[c][r].tune(sig.resonance_hz[r], rate);
        for (std::size_t r = 0; r < other.resonance_hz.size() && r < kMaxRes; ++r) {
          other_banks[c][r].tune(other.resonance_hz[r], rate);
        }
      }
      current = label;
    }
    const double p = purity[i];
    // Blend at constant variance so the mixture is not given away by its level.
    const double norm = 1.0 / std::sqrt(p * p + (1.0 - p) * (1.0 - p));
    double vibration = 0.0;
    for (std::size_t c = 0; c < kImu; ++c) {
      double v = vibration_of(sig, banks[c], rough[c]);
      if (p < 1.0) v = norm * (p * v + (1.0 - p) * vibration_of(other, other_banks[c], other_rough[c]));
      v += sig.noise_std * rng.normal();
      const double scale = c < 3 ? 1.0 : 0.5;  // gyroscope responds more weakly
      log.channels[c][i] = scale * v + (c == 2 ? 9.81 : 0.0);
      if (c < 3) vibration += std::abs(v);
    }
    if (spec.include_joints) {
      const double mean_speed = p * sig.wheel_speed + (1.0 - p) * other.wheel_speed;
      const double mean_effort = p * sig.wheel_effort + (1.0 - p) * other.wheel_effort;
      for (std::size_t w = 0; w < 4; ++w) {
        const double slip = wheel_slip[w].step(0.98, 0.05, rng.normal());
        const double speed = mean_speed * (1.0 + slip) + 0.02 * rng.normal();
        const double accel = i == 0 ? 0.0 : (speed - prev_speed[w]) * rate;
        const double load = wheel_load[w].step(0.9, 0.15, rng.normal());
        const double effort = mean_effort + load + 0.05 * vibration / 3.0 + 0.05 * rng.normal();
        prev_speed[w] = speed;
        log.channels[kImu + 3 * w][i] = speed;
        log.channels[kImu + 3 * w + 1][i] = accel;
        log.channels[kImu + 3 * w + 2][i] = effort;
      }
    }
  }
  return log;
}

}  // namespace uqtsc
