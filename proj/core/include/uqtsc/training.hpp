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
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "uqtsc/arch.hpp"
#include "uqtsc/data.hpp"
#include "uqtsc/hpo.hpp"
#include "uqtsc/layers.hpp"

namespace uqtsc {

/// Stacks windows into [n x channels x length].
Tensor to_tensor(const SequenceDataset& ds);
Tensor to_tensor(const SequenceDataset& ds, const std::vector<std::size_t>& indices);
std::vector<int> labels_of(const SequenceDataset& ds);

InputShape input_shape_of(const SequenceDataset& ds);

struct EvalSummary {
  double nll = 0.0;  // mean negative log of the MC-mean probability of the true class
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
};

/// M-sample predictive posterior over the dataset, summarised.
EvalSummary evaluate(Network& net, const SequenceDataset& ds, std::size_t M, std::uint64_t seed);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // mean objective over batches (ELBO for Flipout)
  double kl = 0.0;          // KL term at the end of the epoch (Flipout only)
  std::optional<EvalSummary> val;
};

struct TrainOptions {
  int epochs = 1;
  std::uint64_t seed = 0;
  AdamOptions adam{};
  /// Defaults to 1 / batches-per-epoch.
  std::optional<double> kl_weight;
  /// Predictive samples for validation; 0 disables per-epoch validation.
  std::size_t val_samples = 10;
  bool validate_every_epoch = true;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::optional<EvalSummary> final_val;
};

/// Adam over shuffled mini-batches of the network's configured size. A trailing
/// batch of one window is skipped (batch normalisation needs two).
TrainResult train(Network& net, const SequenceDataset& train_set, const SequenceDataset* val_set,
                  const TrainOptions& opt);

std::string training_log_header(bool with_kl);
std::string training_log_row(const EpochLog& e, bool with_kl);

/// Train-then-validate objective for a model search space. Keeps the
/// lowest-loss max-budget networks so the incumbent need not be retrained.
class SearchObjective {
 public:
  SearchObjective(const ConfigSpace& space, const SequenceDataset& train_set, const SequenceDataset& val_set,
                  std::size_t val_samples, int max_budget);

  TrialResult operator()(const Assignment& config, int budget_epochs, std::uint64_t seed);
  Objective as_objective();

  /// Network trained for the given max-budget trial seed, if it was the best so far.
  std::optional<Network> network_for(std::uint64_t seed) const;

 private:
  const ConfigSpace& space_;
  const SequenceDataset& train_;
  const SequenceDataset& val_;
  std::size_t val_samples_;
  int max_budget_;
  mutable std::mutex mutex_;
  double best_loss_ = 0.0;
  std::map<std::uint64_t, Network> best_;
};

}  // namespace uqtsc
