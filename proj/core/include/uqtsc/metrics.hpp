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
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uqtsc/arch.hpp"
#include "uqtsc/rng.hpp"
#include "uqtsc/tensor.hpp"

namespace uqtsc {

/// M sampled class-probability matrices [N x 2] and their mean.
struct PredictiveDistribution {
  std::vector<Tensor> samples;
  Tensor mean_probs;
  std::vector<int> predicted_class;

  std::size_t sample_count() const noexcept { return samples.size(); }
  std::size_t input_count() const noexcept { return mean_probs.rank() ? mean_probs.dim(0) : 0; }

  /// Averages the given samples; all must share one [N x C] shape.
  static PredictiveDistribution from_samples(std::vector<Tensor> samples);
};

/// M stochastic forward passes in McInfer mode, processed in chunks of `chunk` inputs.
PredictiveDistribution predictive_posterior(Network& net, const Tensor& x, std::size_t M, Rng& rng,
                                            std::size_t chunk = 256);

/// Natural-log entropy; 0 log 0 = 0. Throws NotNormalized if the sum is off by more than 1e-6.
double predictive_entropy(std::span<const double> probs);

enum class EceMode { Confidence, PositiveClass };

struct CalibrationBin {
  std::size_t count = 0;
  double confidence = 0.0;  // e_i
  double accuracy = 0.0;    // o_i
};

struct EceResult {
  double value = 0.0;
  std::vector<CalibrationBin> bins;
};

/// K equal-width right-inclusive bins over [0, 1]. Confidence mode bins the max
/// probability against correctness; PositiveClass bins p(class 1) against label == 1.
EceResult ece(const Tensor& mean_probs, std::span<const int> labels, std::size_t K = 10,
              EceMode mode = EceMode::Confidence);

struct ClassScores {
  double f1_cl0 = 0.0;
  double f1_cl1 = 0.0;
  double f1_weighted = 0.0;
  double accuracy = 0.0;
  /// Class had neither predictions nor actual members; its F1 is reported as 0.
  std::array<bool, 2> undefined{false, false};
};

ClassScores f1_and_accuracy(std::span<const int> predictions, std::span<const int> labels);

enum class Outcome { TP, TN, FP, FN };
const char* to_string(Outcome o);
Outcome parse_outcome(const std::string& text);
/// Class 1 (sand) is the positive class.
Outcome outcome_of(int label, int prediction);

struct SampleRow {
  std::size_t sample_id = 0;
  double p0 = 0.0;
  double p1 = 0.0;
  double entropy = 0.0;
  int label = 0;
  int pred = 0;
  Outcome outcome = Outcome::TN;
};

struct ReportAggregates {
  double accuracy = 0.0;
  double f1_cl0 = 0.0;
  double f1_cl1 = 0.0;
  double f1_weighted = 0.0;
  double mean_entropy = 0.0;
  double ece = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  /// Free-form labels carried in the footer (family, uq, config name).
  std::vector<std::pair<std::string, std::string>> tags;
  std::vector<SampleRow> samples;
  ReportAggregates aggregates;
  std::vector<CalibrationBin> bins;

  std::optional<std::string> tag(const std::string& key) const;
};

EvalReport make_report(const PredictiveDistribution& dist, std::span<const int> labels, std::size_t K = 10,
                       EceMode mode = EceMode::Confidence);

/// Recomputes aggregates and bins from the per-sample rows.
void recompute_aggregates(EvalReport& report, std::size_t K = 10, EceMode mode = EceMode::Confidence);

std::string format_report_csv(const EvalReport& report);
void write_report_csv(const EvalReport& report, const std::string& path);
EvalReport parse_report_csv(const std::string& text);
EvalReport read_report_csv(const std::string& path);

struct SelectionThresholds {
  double min_f1 = 0.9;
  double max_entropy = 0.1;
};

bool passes_gate(double f1_cl0, double f1_cl1, double mean_entropy, SelectionThresholds t = {});

struct Selection {
  std::vector<std::size_t> selected;
  std::vector<std::size_t> rejected;
};

Selection select_candidates(const std::vector<EvalReport>& reports, SelectionThresholds t = {});

struct OutcomeEntropy {
  std::array<std::vector<double>, 4> groups;  // indexed by Outcome
  std::array<std::optional<double>, 4> means;

  const std::vector<double>& group(Outcome o) const { return groups[static_cast<std::size_t>(o)]; }
  std::optional<double> mean(Outcome o) const { return means[static_cast<std::size_t>(o)]; }
};

OutcomeEntropy entropy_by_outcome(const EvalReport& report);

struct RankSumResult {
  double u = 0.0;
  double z = 0.0;
  /// One-sided p-value for "a tends to exceed b" (normal approximation, tie-corrected).
  double p_greater = 1.0;
};

RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b);

}  // namespace uqtsc
