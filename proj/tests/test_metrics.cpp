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

#include "test_util.hpp"
#include "uqtsc/metrics.hpp"

using namespace uqtsc;

namespace {

Tensor probs_of(const std::vector<double>& p1) {
  Tensor t({p1.size(), 2});
  for (std::size_t i = 0; i < p1.size(); ++i) {
    t.at(i, 0) = 1.0 - p1[i];
    t.at(i, 1) = p1[i];
  }
  return t;
}

EvalReport aggregates_only(double f1_0, double f1_1, double entropy) {
  EvalReport r;
  r.aggregates.f1_cl0 = f1_0;
  r.aggregates.f1_cl1 = f1_1;
  r.aggregates.mean_entropy = entropy;
  return r;
}

}  // namespace

TEST(Posterior, DeterministicNetGivesIdenticalSamples) {
  ModelConfig c;
  c.family = Family::Cnn;
  c.filters = {16, 0, 0};
  c.kernels = {4, 0, 0};
  auto net = build_network(c, {3, 16}, 1);
  Rng rng(1);
  Tensor x({4, 3, 16});
  for (auto& v : x.values()) v = rng.normal();
  const auto dist = predictive_posterior(net, x, 10, rng);
  ASSERT_EQ(dist.sample_count(), 10u);
  Context ctx{Mode::Infer, nullptr};
  const auto single = softmax(net.forward(x, ctx));
  for (const auto& s : dist.samples) {
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i], dist.samples[0][i]);
  }
  for (std::size_t i = 0; i < single.size(); ++i) EXPECT_NEAR(dist.mean_probs[i], single[i], 1e-15);
}

TEST(Posterior, HandSuppliedSamples) {
  const auto d = PredictiveDistribution::from_samples({Tensor({1, 2}, {0.8, 0.2}), Tensor({1, 2}, {0.6, 0.4})});
  EXPECT_NEAR(d.mean_probs[0], 0.7, 1e-15);
  EXPECT_NEAR(d.mean_probs[1], 0.3, 1e-15);
  EXPECT_EQ(d.predicted_class[0], 0);
  const auto one = PredictiveDistribution::from_samples({Tensor({1, 2}, {0.25, 0.75})});
  EXPECT_EQ(one.mean_probs[1], 0.75);
  EXPECT_EQ(one.predicted_class[0], 1);
}

TEST(Posterior, MeanIsOrderInvariant) {
  Rng rng(2);
  std::vector<Tensor> samples;
  for (int m = 0; m < 7; ++m) {
    const double p = rng.uniform();
    samples.push_back(Tensor({1, 2}, {p, 1 - p}));
  }
  const auto a = PredictiveDistribution::from_samples(samples);
  std::reverse(samples.begin(), samples.end());
  const auto b = PredictiveDistribution::from_samples(samples);
  EXPECT_NEAR(a.mean_probs[0], b.mean_probs[0], 1e-15);
}

TEST(Posterior, McDropoutSamplesDiffer) {
  ModelConfig c;
  c.family = Family::Cnn;
  c.filters = {16, 0, 0};
  c.kernels = {4, 0, 0};
  c.uq = UqMethod::McDropout;
  c.dropout_rate = 0.3;
  auto net = build_network(c, {3, 16}, 1);
  Rng rng(3);
  Tensor x({2, 3, 16});
  for (auto& v : x.values()) v = rng.normal();
  const auto d = predictive_posterior(net, x, 5, rng);
  EXPECT_NE(d.samples[0][0], d.samples[1][0]);
}

TEST(Entropy, Examples) {
  const double half[2] = {0.5, 0.5}, certain[2] = {1.0, 0.0}, skew[2] = {0.7, 0.3};
  EXPECT_NEAR(predictive_entropy(half), std::log(2.0), 1e-12);
  EXPECT_EQ(predictive_entropy(certain), 0.0);
  EXPECT_NEAR(predictive_entropy(skew), -(0.7 * std::log(0.7) + 0.3 * std::log(0.3)), 1e-12);
  EXPECT_NEAR(predictive_entropy(skew), 0.6109, 1e-4);
  const double bad[2] = {0.7, 0.4};
  EXPECT_UQ_ERROR(predictive_entropy(bad), NotNormalized);
}

TEST(Entropy, BoundedAndPermutationInvariant) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform();
    const double a[2] = {p, 1 - p}, b[2] = {1 - p, p};
    const double h = predictive_entropy(a);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 0.6932);
    EXPECT_NEAR(h, predictive_entropy(b), 1e-15);
  }
}

TEST(Ece, PerfectConfidentPredictions) {
  const std::vector<int> labels = {0, 1, 1, 0};
  EXPECT_EQ(ece(probs_of({0.0, 1.0, 1.0, 0.0}), labels).value, 0.0);
}

TEST(Ece, HandBinnedFourSamples) {
  // Confidences 0.9 (correct), 0.9 (correct), 0.6 (wrong), 0.6 (correct), all predicting class 1.
  const auto probs = probs_of({0.9, 0.9, 0.6, 0.6});
  const std::vector<int> labels = {1, 1, 0, 1};
  const auto two = ece(probs, labels, 2);
  EXPECT_NEAR(two.value, 0.0, 1e-12);
  EXPECT_EQ(two.bins[1].count, 4u);
  EXPECT_NEAR(two.bins[1].confidence, 0.75, 1e-12);
  EXPECT_NEAR(two.bins[1].accuracy, 0.75, 1e-12);
  const auto four = ece(probs, labels, 4);
  EXPECT_NEAR(four.value, 0.1, 1e-12);
  EXPECT_EQ(four.bins[2].count, 2u);
  EXPECT_EQ(four.bins[3].count, 2u);
}

TEST(Ece, RightInclusiveEdges) {
  // 0.5 sits on the edge of [0, 0.5] and (0.5, 1].
  const auto r = ece(probs_of({0.5, 0.75}), std::vector<int>{1, 1}, 2);
  EXPECT_EQ(r.bins[0].count, 1u);
  EXPECT_EQ(r.bins[1].count, 1u);
  const auto tenth = ece(probs_of({0.3}), std::vector<int>{0}, 10, EceMode::PositiveClass);
  EXPECT_EQ(tenth.bins[2].count, 1u);
}

TEST(Ece, SingleBinEqualsCalibrationGap) {
  Rng rng(5);
  std::vector<double> p1(200);
  std::vector<int> labels(200);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    p1[i] = rng.uniform();
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
  const auto probs = probs_of(p1);
  double conf = 0.0, hits = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const int pred = p1[i] > 0.5 ? 1 : 0;
    conf += std::max(p1[i], 1 - p1[i]);
    hits += pred == labels[i];
  }
  const double n = static_cast<double>(p1.size());
  EXPECT_EQ(ece(probs, labels, 1).value, std::abs(hits / n - conf / n));
}

TEST(Ece, CalibratedStreamIsSmall) {
  Rng rng(6);
  const std::size_t n = 10000;
  std::vector<double> p1(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    p1[i] = rng.uniform();
    labels[i] = rng.bernoulli(p1[i]) ? 1 : 0;
  }
  const double value = ece(probs_of(p1), labels, 10).value;
  EXPECT_LT(value, 0.03);
  EXPECT_GE(value, 0.0);
  EXPECT_LT(ece(probs_of(p1), labels, 10, EceMode::PositiveClass).value, 0.03);
}

TEST(Ece, EmptyInput) {
  EXPECT_UQ_ERROR(ece(Tensor({0, 2}), std::vector<int>{}, 10), EmptyInput);
}

TEST(F1, Examples) {
  const std::vector<int> labels = {0, 0, 1, 1};
  const auto s = f1_and_accuracy(std::vector<int>{0, 1, 1, 1}, labels);
  EXPECT_NEAR(s.f1_cl0, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.f1_cl1, 0.8, 1e-12);
  EXPECT_NEAR(s.f1_weighted, 0.5 * 2.0 / 3.0 + 0.5 * 0.8, 1e-12);
  EXPECT_NEAR(s.accuracy, 0.75, 1e-12);
  const auto perfect = f1_and_accuracy(labels, labels);
  EXPECT_EQ(perfect.f1_cl0, 1.0);
  EXPECT_EQ(perfect.f1_cl1, 1.0);
  EXPECT_EQ(perfect.accuracy, 1.0);
  const auto degenerate = f1_and_accuracy(std::vector<int>{1, 1, 1, 1}, labels);
  EXPECT_EQ(degenerate.f1_cl0, 0.0);
  EXPECT_UQ_ERROR(f1_and_accuracy(std::vector<int>{}, std::vector<int>{}), EmptyInput);
}

TEST(F1, ZeroSupportClassIsFlagged) {
  const auto s = f1_and_accuracy(std::vector<int>{1, 1}, std::vector<int>{1, 1});
  EXPECT_TRUE(s.undefined[0]);
  EXPECT_FALSE(s.undefined[1]);
  EXPECT_EQ(s.f1_cl0, 0.0);
  EXPECT_EQ(s.f1_weighted, 1.0);
}

TEST(F1, AgreesWithConfusionMatrixOracle) {
  Rng rng(7);
  std::vector<int> y(1000), p(1000);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = static_cast<int>(rng.uniform_int(0, 1));
    p[i] = rng.bernoulli(0.8) ? y[i] : 1 - y[i];
  }
  double f1[2], support[2];
  for (int c = 0; c < 2; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      tp += p[i] == c && y[i] == c;
      fp += p[i] == c && y[i] != c;
      fn += p[i] != c && y[i] == c;
    }
    const double precision = tp / (tp + fp), recall = tp / (tp + fn);
    f1[c] = 2 * precision * recall / (precision + recall);
    support[c] = tp + fn;
  }
  const auto s = f1_and_accuracy(p, y);
  EXPECT_NEAR(s.f1_cl0, f1[0], 1e-12);
  EXPECT_NEAR(s.f1_cl1, f1[1], 1e-12);
  EXPECT_NEAR(s.f1_weighted, (support[0] * f1[0] + support[1] * f1[1]) / 1000.0, 1e-12);
}

TEST(Gate, TableRowAndBoundaries) {
  EXPECT_TRUE(passes_gate(0.9942, 0.9814, 0.0142));
  EXPECT_FALSE(passes_gate(0.95, 0.89, 0.05));
  EXPECT_FALSE(passes_gate(0.95, 0.95, 0.12));
  EXPECT_TRUE(passes_gate(0.9, 0.9, 0.1));
  const auto sel = select_candidates({aggregates_only(0.9942, 0.9814, 0.0142), aggregates_only(0.95, 0.89, 0.05),
                                      aggregates_only(0.9, 0.9, 0.1)});
  EXPECT_EQ(sel.selected, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(sel.rejected, (std::vector<std::size_t>{1}));
}

TEST(Outcomes, GroupsAndMeans) {
  EvalReport r;
  const std::pair<int, int> cases[4] = {{1, 1}, {0, 0}, {0, 1}, {1, 0}};
  for (std::size_t i = 0; i < 4; ++i) {
    SampleRow s;
    s.label = cases[i].first;
    s.pred = cases[i].second;
    s.outcome = outcome_of(s.label, s.pred);
    s.entropy = 0.1 * static_cast<double>(i);
    r.samples.push_back(s);
  }
  const auto g = entropy_by_outcome(r);
  for (auto o : {Outcome::TP, Outcome::TN, Outcome::FP, Outcome::FN}) EXPECT_EQ(g.group(o).size(), 1u);
  EXPECT_NEAR(*g.mean(Outcome::FP), 0.2, 1e-15);

  EvalReport correct;
  correct.samples = {r.samples[0], r.samples[1]};
  const auto only = entropy_by_outcome(correct);
  EXPECT_TRUE(only.group(Outcome::FP).empty());
  EXPECT_FALSE(only.mean(Outcome::FN).has_value());
}

TEST(RankSum, DetectsShift) {
  Rng rng(8);
  std::vector<double> a(40), b(200);
  for (auto& v : a) v = rng.normal(1.0, 1.0);
  for (auto& v : b) v = rng.normal(0.0, 1.0);
  EXPECT_LT(rank_sum_test(a, b).p_greater, 0.01);
  EXPECT_GT(rank_sum_test(b, a).p_greater, 0.5);
}

TEST(RankSum, SmallExactCase) {
  // a = {3, 4}, b = {1, 2}: U = 4, mean 2, var = 2*2*5/12.
  const std::vector<double> a = {3, 4}, b = {1, 2};
  const auto r = rank_sum_test(a, b);
  EXPECT_DOUBLE_EQ(r.u, 4.0);
  EXPECT_NEAR(r.z, (4.0 - 2.0 - 0.5) / std::sqrt(20.0 / 12.0), 1e-12);
}

TEST(ReportCsv, RoundTripAndRecompute) {
  Rng rng(9);
  std::vector<Tensor> samples;
  for (int m = 0; m < 3; ++m) {
    Tensor t({20, 2});
    for (std::size_t i = 0; i < 20; ++i) {
      const double p = rng.uniform();
      t.at(i, 0) = p;
      t.at(i, 1) = 1 - p;
    }
    samples.push_back(t);
  }
  const auto dist = PredictiveDistribution::from_samples(samples);
  std::vector<int> labels(20);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_int(0, 1));
  auto report = make_report(dist, labels, 10);
  report.tags = {{"family", "cnn"}, {"uq", "mc_dropout"}};
  const auto text = format_report_csv(report);
  auto back = parse_report_csv(text);
  EXPECT_EQ(format_report_csv(back), text);
  EXPECT_EQ(back.tag("uq"), "mc_dropout");
  auto recomputed = back;
  recompute_aggregates(recomputed, 10);
  EXPECT_NEAR(recomputed.aggregates.ece, back.aggregates.ece, 1e-9);
  EXPECT_NEAR(recomputed.aggregates.f1_weighted, back.aggregates.f1_weighted, 1e-9);
  EXPECT_NEAR(recomputed.aggregates.mean_entropy, back.aggregates.mean_entropy, 1e-9);
}

TEST(ReportCsv, MissingEntropyFooter) {
  const std::string text =
      "sample_id,p0,p1,entropy,label,pred,outcome\n"
      "#agg,ece,0.05\n#agg,f1_cl0,0.99\n#agg,f1_cl1,0.98\n#agg,f1_weighted,0.98\n#agg,accuracy,0.98\n";
  EXPECT_UQ_ERROR(parse_report_csv(text), MalformedReport);
  EXPECT_UQ_ERROR(parse_report_csv("nonsense\n"), MalformedReport);
}
