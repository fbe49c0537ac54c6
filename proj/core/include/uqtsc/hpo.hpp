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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uqtsc/arch.hpp"
#include "uqtsc/kv.hpp"
#include "uqtsc/rng.hpp"

namespace uqtsc {

/// One value per space dimension; NaN marks an inactive conditional parameter.
using Assignment = std::vector<double>;

struct ParamSpec {
  std::string name;
  bool integer = true;
  double lo = 0.0;
  double hi = 1.0;
  /// Active iff the parent dimension's value is at least `min_parent`.
  std::optional<std::size_t> parent;
  double min_parent = 0.0;
};

class ConfigSpace {
 public:
  ConfigSpace() = default;
  explicit ConfigSpace(std::vector<ParamSpec> params, KeyValues fixed = {});

  /// Table-1 ranges for a tunable family; FCN/ResNet expose batch size and dropout only.
  static ConfigSpace model_space(Family family, UqMethod uq);
  /// Single continuous parameter `x` in [0, 1].
  static ConfigSpace toy_space();
  /// `family`, `uq` and optional `<param>.min` / `<param>.max` overrides.
  static ConfigSpace from_kv(const KeyValues& kv);

  std::size_t dims() const noexcept { return params_.size(); }
  const std::vector<ParamSpec>& params() const noexcept { return params_; }
  const KeyValues& fixed() const noexcept { return fixed_; }
  std::optional<std::size_t> index(const std::string& name) const;
  /// True when some other dimension is conditioned on dimension i.
  bool is_parent(std::size_t i) const;

  bool is_active(const Assignment& a, std::size_t i) const;
  /// Rounds integers, clips to range and blanks inactive dimensions.
  Assignment repair(Assignment a) const;
  /// InvalidConfig on out-of-range or wrongly (in)active values.
  void validate(const Assignment& a) const;

  bool is_model_space() const { return fixed_.contains("family"); }
  ModelConfig to_model_config(const Assignment& a) const;
  /// Column names and values used in the trial log.
  std::vector<std::string> flat_keys() const;
  std::vector<std::string> flat_values(const Assignment& a) const;

 private:
  std::vector<ParamSpec> params_;
  KeyValues fixed_;
};

Assignment sample_random(const ConfigSpace& space, Rng& rng);

enum class TrialStatus { Ok, Failed };
const char* to_string(TrialStatus s);

struct TrialRecord {
  std::size_t trial_id = 0;
  int bracket = 0;
  int rung = 0;
  int budget_epochs = 0;
  TrialStatus status = TrialStatus::Ok;
  double val_loss = 0.0;
  double val_wf1 = 0.0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  Assignment config;
};

struct Rung {
  int budget = 0;
  int n_configs = 0;
};

struct Bracket {
  int s = 0;
  std::vector<Rung> rungs;
  long epochs() const;
};

struct HyperbandSchedule {
  int min_budget = 16;
  int max_budget = 50;
  int eta = 3;
  int s_max = 0;
  std::vector<Bracket> brackets;  // s = s_max .. 0
  long epochs_per_sweep() const;
};

HyperbandSchedule hyperband_schedule(int min_budget = 16, int max_budget = 50, int eta = 3);

struct KdeOptions {
  double top_fraction = 0.15;
  double random_fraction = 1.0 / 3.0;
  int candidates = 64;
  double bandwidth_factor = 3.0;
  double min_bandwidth = 1e-3;
  /// Aitchison-Aitken weight on non-matching categories of conditional parents.
  double discrete_lambda = 0.1;
};

/// Proposes from a good/bad density split on the highest budget holding at least
/// dims+2 ok trials. InsufficientData when no budget qualifies.
Assignment kde_propose(const std::vector<TrialRecord>& trials, const ConfigSpace& space, Rng& rng,
                       const KdeOptions& opt = {});

struct TrialResult {
  double val_loss = 0.0;
  double val_wf1 = 0.0;
};

/// Must be deterministic in (config, budget, seed). A throw marks the trial failed.
using Objective = std::function<TrialResult(const Assignment& config, int budget_epochs, std::uint64_t seed)>;

/// Analytic objective on toy_space(): (x - 0.3)^2 at every budget.
TrialResult toy_objective(const Assignment& config, int budget_epochs, std::uint64_t seed);

/// Best-first order: ok trials by loss, failed last, ties by position.
std::vector<std::size_t> rank_trials(const std::vector<TrialRecord>& trials);

struct HalvingResult {
  std::vector<TrialRecord> trials;
  /// Config indices evaluated at each rung.
  std::vector<std::vector<std::size_t>> rung_members;
};

/// Evaluates every config at budgets[0], promoting the top ceil(n/eta) to each next budget.
HalvingResult successive_halving(const std::vector<Assignment>& configs, const std::vector<int>& budgets, int eta,
                                 const Objective& objective, std::uint64_t seed = 0, int workers = 1);

enum class IterationMode {
  /// One iteration runs every bracket s_max..0.
  FullSweep,
  /// One iteration runs a single bracket, cycling s_max..0.
  SingleBracket,
};

struct BohbOptions {
  int min_budget = 16;
  int max_budget = 50;
  int eta = 3;
  int iterations = 20;
  std::uint64_t seed = 0;
  int workers = 1;
  IterationMode mode = IterationMode::FullSweep;
  KdeOptions kde;
  /// Called once per finished trial, in trial_id order.
  std::function<void(const TrialRecord&)> on_trial;
};

struct BohbResult {
  std::vector<TrialRecord> trials;
  std::optional<std::size_t> incumbent;
  HyperbandSchedule schedule;
  long charged_epochs() const;
};

BohbResult run_bohb(const ConfigSpace& space, const Objective& objective, const BohbOptions& opt);

/// Baseline: `n_trials` uniform configs, each at `budget`.
BohbResult random_search(const ConfigSpace& space, const Objective& objective, int n_trials, int budget,
                         std::uint64_t seed);

std::string trial_csv_header(const ConfigSpace& space);
std::string trial_csv_row(const ConfigSpace& space, const TrialRecord& t);

}  // namespace uqtsc
