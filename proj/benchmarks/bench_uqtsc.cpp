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

#include <benchmark/benchmark.h>

#include "uqtsc/arch.hpp"
#include "uqtsc/hpo.hpp"
#include "uqtsc/layers.hpp"
#include "uqtsc/metrics.hpp"
#include "uqtsc/uq.hpp"

namespace {

using namespace uqtsc;

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.normal();
  return t;
}

// Conv1d forward+backward on a [32 x C x 400] batch, filters and kernel from args.
void BM_Conv1dTrainStep(benchmark::State& state) {
  const auto filters = static_cast<std::size_t>(state.range(0));
  const auto kernel = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  Conv1d conv(6, filters, kernel, Padding::Same, rng);
  const auto x = random_tensor({32, 6, 400}, rng);
  Context ctx{Mode::Train, &rng};
  for (auto _ : state) {
    auto y = conv.forward(x, ctx);
    benchmark::DoNotOptimize(conv.backward(y));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_Conv1dTrainStep)->Args({16, 4})->Args({64, 8})->Args({128, 16})->Unit(benchmark::kMillisecond);

void BM_LstmTrainStep(benchmark::State& state) {
  const auto cells = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Lstm lstm(16, cells, false, rng);
  const auto x = random_tensor({32, 100, 16}, rng);
  Context ctx{Mode::Train, &rng};
  for (auto _ : state) {
    auto y = lstm.forward(x, ctx);
    benchmark::DoNotOptimize(lstm.backward(y));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_LstmTrainStep)->Arg(8)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

// M-sample predictive posterior of an MC Dropout CNN over 256 windows.
void BM_PredictivePosterior(benchmark::State& state) {
  ModelConfig c;
  c.family = Family::Cnn;
  c.uq = UqMethod::McDropout;
  c.cnn_blocks = 2;
  c.filters = {32, 32, 0};
  c.kernels = {8, 5, 0};
  c.dropout_rate = 0.2;
  auto net = build_network(c, {6, 400}, 3);
  Rng rng(3);
  const auto x = random_tensor({256, 6, 400}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(predictive_posterior(net, x, static_cast<std::size_t>(state.range(0)), rng));
}
BENCHMARK(BM_PredictivePosterior)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Ece(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  Tensor probs({n, 2});
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = rng.uniform();
    probs.at(i, 0) = 1 - p;
    probs.at(i, 1) = p;
    labels[i] = rng.bernoulli(p) ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(ece(probs, labels, 10));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_Ece)->Arg(1000)->Arg(100000);

// One KDE proposal from N observed trials in the CNN-LSTM search space.
void BM_KdePropose(benchmark::State& state) {
  const auto space = ConfigSpace::model_space(Family::CnnLstm, UqMethod::McDropout);
  Rng rng(5);
  std::vector<TrialRecord> trials;
  for (long i = 0; i < state.range(0); ++i) {
    TrialRecord t;
    t.trial_id = static_cast<std::size_t>(i);
    t.budget_epochs = 16;
    t.config = sample_random(space, rng);
    t.val_loss = rng.uniform();
    trials.push_back(t);
  }
  KdeOptions opt;
  opt.random_fraction = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(kde_propose(trials, space, rng, opt));
}
BENCHMARK(BM_KdePropose)->Arg(50)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
