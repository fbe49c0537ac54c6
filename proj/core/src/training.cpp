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

#include "uqtsc/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "uqtsc/error.hpp"
#include "uqtsc/metrics.hpp"
#include "uqtsc/uq.hpp"

namespace uqtsc {

Tensor to_tensor(const SequenceDataset& ds, const std::vector<std::size_t>& indices) {
  const std::size_t c = ds.channel_count(), len = ds.window_length;
  Tensor x({indices.size(), c, len});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& w = ds.windows.at(indices[i]);
    if (w.values.size() != c * len) throw Error(ErrorKind::ShapeMismatch, "window size differs from dataset layout");
    std::copy(w.values.begin(), w.values.end(), x.data() + i * c * len);
  }
  return x;
}

Tensor to_tensor(const SequenceDataset& ds) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  return to_tensor(ds, all);
}

std::vector<int> labels_of(const SequenceDataset& ds) {
  std::vector<int> y;
  y.reserve(ds.size());
  for (const auto& w : ds.windows) y.push_back(w.label);
  return y;
}

InputShape input_shape_of(const SequenceDataset& ds) { return {ds.channel_count(), ds.window_length}; }

EvalSummary evaluate(Network& net, const SequenceDataset& ds, std::size_t M, std::uint64_t seed) {
  if (ds.empty()) throw Error(ErrorKind::EmptyDataset, "cannot evaluate on an empty dataset");
  Rng rng(seed);
  const auto dist = predictive_posterior(net, to_tensor(ds), net.stochastic() ? M : 1, rng);
  const auto y = labels_of(ds);
  EvalSummary s;
  for (std::size_t i = 0; i < y.size(); ++i) {
    s.nll -= std::log(std::max(dist.mean_probs.at(i, static_cast<std::size_t>(y[i])), 1e-12));
  }
  s.nll /= static_cast<double>(y.size());
  const auto scores = f1_and_accuracy(dist.predicted_class, y);
  s.weighted_f1 = scores.f1_weighted;
  s.accuracy = scores.accuracy;
  return s;
}

TrainResult train(Network& net, const SequenceDataset& train_set, const SequenceDataset* val_set,
                  const TrainOptions& opt) {
  if (train_set.size() < 2) throw Error(ErrorKind::BatchTooSmall, "training needs at least two windows");
  if (input_shape_of(train_set) != net.input()) {
    throw Error(ErrorKind::CheckpointMismatch, "dataset layout does not match the network input");
  }
  const auto batch = static_cast<std::size_t>(std::max(1, net.config().batch_size));
  const std::size_t n = train_set.size();
  std::size_t batches = 0;
  for (std::size_t b = 0; b < n; b += batch) {
    if (std::min(batch, n - b) >= 2) ++batches;
  }
  const double kl_weight = opt.kl_weight.value_or(1.0 / static_cast<double>(batches));
  const bool bayesian = net.config().uq == UqMethod::Flipout;

  const Rng root(opt.seed);
  Rng shuffle_rng = root.split(1);
  Rng noise_rng = root.split(2);
  Adam adam(opt.adam);
  const auto labels = labels_of(train_set);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    double loss_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < n; b += batch) {
      const std::size_t len = std::min(batch, n - b);
      if (len < 2) continue;
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(b),
                                   order.begin() + static_cast<std::ptrdiff_t>(b + len));
      std::vector<int> y(len);
      for (std::size_t i = 0; i < len; ++i) y[i] = labels[idx[i]];
      Context ctx{Mode::Train, &noise_rng};
      net.zero_grad();
      const Tensor logits = net.forward(to_tensor(train_set, idx), ctx);
      const auto ce = softmax_cross_entropy(logits, y);
      double loss = ce.loss;
      if (bayesian) {
        loss = elbo_loss(ce.loss, net.kl(), kl_weight);
        net.add_kl_grad(kl_weight);
      }
      net.backward(ce.dlogits);
      adam.step(net.parameters());
      if (!std::isfinite(loss)) throw Error(ErrorKind::NonFinite, "training loss diverged at epoch " + std::to_string(epoch));
      loss_sum += loss;
      ++used;
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, used));
    log.kl = bayesian ? net.kl() : 0.0;
    const bool last = epoch == opt.epochs;
    if (val_set && !val_set->empty() && opt.val_samples > 0 && (opt.validate_every_epoch || last)) {
      log.val = evaluate(net, *val_set, opt.val_samples, root.split(1000 + static_cast<std::uint64_t>(epoch)).seed());
    }
    if (opt.on_epoch) opt.on_epoch(log);
    result.epochs.push_back(log);
  }
  if (!result.epochs.empty()) result.final_val = result.epochs.back().val;
  return result;
}

std::string training_log_header(bool with_kl) {
  return with_kl ? "epoch,train_loss,val_loss,val_wF1,kl" : "epoch,train_loss,val_loss,val_wF1";
}

std::string training_log_row(const EpochLog& e, bool with_kl) {
  std::string s = std::to_string(e.epoch) + "," + format_double(e.train_loss) + ",";
  s += e.val ? format_double(e.val->nll) + "," + format_double(e.val->weighted_f1) : std::string(",");
  if (with_kl) s += "," + format_double(e.kl);
  return s;
}

SearchObjective::SearchObjective(const ConfigSpace& space, const SequenceDataset& train_set,
                                 const SequenceDataset& val_set, std::size_t val_samples, int max_budget)
    : space_(space), train_(train_set), val_(val_set), val_samples_(val_samples), max_budget_(max_budget) {
  if (train_set.empty() || val_set.empty()) throw Error(ErrorKind::EmptyDataset, "search needs train and val windows");
  best_loss_ = std::numeric_limits<double>::infinity();
}

TrialResult SearchObjective::operator()(const Assignment& config, int budget_epochs, std::uint64_t seed) {
  const ModelConfig mc = space_.to_model_config(config);
  Network net = build_network(mc, input_shape_of(train_), seed);
  TrainOptions opt;
  opt.epochs = budget_epochs;
  opt.seed = seed;
  opt.val_samples = val_samples_;
  opt.validate_every_epoch = false;
  const auto r = train(net, train_, &val_, opt);
  if (!r.final_val) throw Error(ErrorKind::EmptyDataset, "no validation result");
  TrialResult out{r.final_val->nll, r.final_val->weighted_f1};
  if (budget_epochs == max_budget_ && std::isfinite(out.val_loss)) {
    std::lock_guard lock(mutex_);
    if (out.val_loss < best_loss_) {
      best_loss_ = out.val_loss;
      best_.clear();
    }
    if (out.val_loss <= best_loss_) best_.insert_or_assign(seed, std::move(net));
  }
  return out;
}

Objective SearchObjective::as_objective() {
  return [this](const Assignment& a, int budget, std::uint64_t seed) { return (*this)(a, budget, seed); };
}

std::optional<Network> SearchObjective::network_for(std::uint64_t seed) const {
  std::lock_guard lock(mutex_);
  if (auto it = best_.find(seed); it != best_.end()) return it->second;
  return std::nullopt;
}

}  // namespace uqtsc
