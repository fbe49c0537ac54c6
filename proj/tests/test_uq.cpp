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

#include <cmath>

#include "test_util.hpp"
#include "uqtsc/uq.hpp"

using namespace uqtsc;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void expect_close(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
}

FlipoutDense zero_sigma_flipout(const Dense& base) {
  FlipoutDense f(base);
  f.rho_weight().value.fill(-1000.0);
  f.rho_bias().value.fill(-1000.0);
  return f;
}

}  // namespace

TEST(McDropout, RateZeroIsIdentity) {
  Rng rng(1);
  const auto x = random_tensor({3, 4}, rng);
  for (auto mode : {Mode::Train, Mode::Infer, Mode::McInfer}) {
    expect_close(mc_dropout_forward(x, 0.0, mode, rng), x, 0.0);
  }
}

TEST(McDropout, FixedMaskInvertedScaling) {
  const auto y = apply_dropout_mask(Tensor({1, 2}, {2, 2}), {1, 0}, 0.5);
  EXPECT_DOUBLE_EQ(y[0], 4.0);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
}

TEST(McDropout, InferModeIsIdentityAndRateChecked) {
  Rng rng(2);
  const auto x = random_tensor({2, 5}, rng);
  expect_close(mc_dropout_forward(x, 0.4, Mode::Infer, rng), x, 0.0);
  EXPECT_UQ_ERROR(mc_dropout_forward(x, 1.0, Mode::Train, rng), InvalidRate);
  EXPECT_UQ_ERROR(Dropout(-0.1), InvalidRate);
}

TEST(McDropout, UnbiasedOverManyDraws) {
  Rng rng(3);
  const Tensor x({1, 1}, {1.5});
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) sum += mc_dropout_forward(x, 0.3, Mode::McInfer, rng)[0];
  EXPECT_NEAR(sum / draws, 1.5, 0.015);
}

TEST(McDropout, LayerResamplesEveryPass) {
  Dropout d(0.5);
  Rng rng(4);
  Context ctx{Mode::McInfer, &rng};
  const Tensor x({1, 64}, std::vector<double>(64, 1.0));
  const auto a = d.forward(x, ctx);
  const auto b = d.forward(x, ctx);
  bool differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) differ |= a[i] != b[i];
  EXPECT_TRUE(differ);
}

TEST(DropConnect, RateZeroMatchesDeterministicLayers) {
  Rng rng(5);
  Dense dense(4, 3, rng);
  Conv1d conv(2, 3, 4, Padding::Same, rng);
  DropConnectDense dcd(dense, 0.0);
  DropConnectConv1d dcc(conv, 0.0);
  const auto xd = random_tensor({2, 4}, rng);
  const auto xc = random_tensor({2, 2, 9}, rng);
  for (auto mode : {Mode::Train, Mode::McInfer, Mode::Infer}) {
    Context ctx{mode, &rng};
    Context plain{Mode::Infer, nullptr};
    expect_close(dcd.forward(xd, ctx), dense.forward(xd, plain), 1e-12);
    expect_close(dcc.forward(xc, ctx), conv.forward(xc, plain), 1e-12);
  }
}

TEST(DropConnect, FixedMaskArithmetic) {
  Dense d(Tensor({2, 1}, {1, 1}), Tensor({1}, {0.0}));
  const auto y = dropconnect_dense_forward(Tensor({1, 2}, {1, 1}), d, 0.5, {1, 0});
  EXPECT_DOUBLE_EQ(y[0], 2.0);
}

TEST(DropConnect, BiasIsNeverMasked) {
  Dense d(Tensor({2, 1}, {1, 1}), Tensor({1}, {3.0}));
  const auto y = dropconnect_dense_forward(Tensor({1, 2}, {1, 1}), d, 0.5, {0, 0});
  EXPECT_DOUBLE_EQ(y[0], 3.0);
}

TEST(DropConnect, MeanAndVarianceAtQuarterRate) {
  const Tensor w({3, 1}, {0.5, -1.0, 2.0});
  Dense d(w, Tensor({1}, {0.0}));
  const Tensor x({1, 3}, {1.0, 0.5, -0.25});
  const double p = 0.25;
  double mean_exact = 0.0, var_exact = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    mean_exact += x[j] * w[j];
    var_exact += x[j] * x[j] * w[j] * w[j] * p / (1 - p);
  }
  Rng rng(6);
  const int draws = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double y = dropconnect_dense_forward(x, d, p, Mode::McInfer, rng)[0];
    s += y;
    s2 += y * y;
  }
  const double mean = s / draws, var = s2 / draws - mean * mean;
  EXPECT_NEAR(mean, mean_exact, 0.01 * std::abs(mean_exact));
  EXPECT_NEAR(var, var_exact, 0.05 * var_exact);
}

TEST(Flipout, ZeroSigmaMatchesDense) {
  Rng rng(7);
  Dense dense(5, 2, rng);
  auto f = zero_sigma_flipout(dense);
  const auto x = random_tensor({4, 5}, rng);
  Context ctx{Mode::McInfer, &rng};
  Context plain{Mode::Infer, nullptr};
  expect_close(f.forward(x, ctx), dense.forward(x, plain), 1e-12);
}

TEST(Flipout, IdenticalRowsGetDifferentPerturbations) {
  Rng rng(8);
  FlipoutDense f(6, 2, rng);
  Tensor x({2, 6});
  for (std::size_t j = 0; j < 6; ++j) x.at(0, j) = x.at(1, j) = 0.3 * static_cast<double>(j) - 0.5;
  Context ctx{Mode::McInfer, &rng};
  const auto y = f.forward(x, ctx);
  EXPECT_NE(y.at(0, 0), y.at(1, 0));
}

TEST(Flipout, OutputVarianceMatchesWeightSpread) {
  Rng rng(9);
  Dense base(Tensor({3, 1}, {0.2, -0.4, 0.1}), Tensor({1}, {0.0}));
  FlipoutDense f(base);
  f.rho_weight().value = Tensor({3, 1}, {-1.0, 0.0, 0.5});
  f.rho_bias().value.fill(-1000.0);
  const Tensor x({1, 3}, {1.0, -0.5, 0.8});
  double expected = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const double sigma = softplus(f.rho_weight().value[j]);
    expected += x[j] * x[j] * sigma * sigma;
  }
  Context ctx{Mode::McInfer, &rng};
  const int calls = 10000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < calls; ++i) {
    const double y = f.forward(x, ctx)[0];
    s += y;
    s2 += y * y;
  }
  const double mean = s / calls, var = s2 / calls - mean * mean;
  EXPECT_NEAR(var, expected, 0.05 * expected);
}

TEST(Flipout, StochasticAcrossPasses) {
  Rng rng(10);
  FlipoutDense f(4, 2, rng);
  Context ctx{Mode::McInfer, &rng};
  const auto x = random_tensor({1, 4}, rng);
  const auto a = f.forward(x, ctx), b = f.forward(x, ctx);
  EXPECT_NE(a[0], b[0]);
}

TEST(Flipout, InitialSigmaAndMeanLayer) {
  Rng rng(11);
  Dense base(3, 2, rng);
  FlipoutDense f(base);
  for (double r : f.rho_weight().value.values()) EXPECT_NEAR(softplus(r), 0.05, 1e-12);
  const auto mean = f.mean_layer();
  for (std::size_t i = 0; i < base.weight().value.size(); ++i) {
    EXPECT_EQ(mean.weight().value[i], base.weight().value[i]);
  }
}

TEST(GaussianKl, Examples) {
  const double zero[1] = {0.0}, one[1] = {1.0};
  EXPECT_NEAR(gaussian_kl(zero, one), 0.0, 1e-12);
  EXPECT_NEAR(gaussian_kl(one, one), 0.5, 1e-12);
  const double mu[1] = {0.3}, sigma[1] = {0.5};
  EXPECT_NEAR(gaussian_kl(mu, sigma), std::log(2.0) + (0.25 + 0.09) / 2.0 - 0.5, 1e-12);
  const double bad[1] = {0.0};
  EXPECT_UQ_ERROR(gaussian_kl(zero, bad), NonPositiveSigma);
}

TEST(GaussianKl, NonnegativeProperty) {
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> mu(5), sigma(5);
    for (auto& m : mu) m = rng.normal(0.0, 2.0);
    for (auto& s : sigma) s = std::exp(rng.normal(0.0, 1.5));
    EXPECT_GE(gaussian_kl(mu, sigma), 0.0);
  }
}

TEST(Elbo, Arithmetic) {
  EXPECT_DOUBLE_EQ(elbo_loss(0.7, 0.0, 0.5), 0.7);
  EXPECT_NEAR(elbo_loss(0.7, 10.0, 0.01), 0.8, 1e-12);
  EXPECT_THROW(elbo_loss(0.7, 1.0, 0.0), Error);
}

namespace {

// Fits y = 2x with a single Flipout weight; returns the learned posterior mean.
double fit_toy_regression(double kl_weight) {
  Rng rng(13);
  Dense base(Tensor({1, 1}, {0.0}), Tensor({1}, {0.0}));
  FlipoutDense f(base);
  Context ctx{Mode::Train, &rng};
  Adam adam(AdamOptions{0.02});
  const Tensor x({4, 1}, {-1.0, -0.5, 0.5, 1.0});
  for (int step = 0; step < 3000; ++step) {
    for (auto* p : f.parameters()) p->zero_grad();
    const auto y = f.forward(x, ctx);
    Tensor dy(y.shape());
    for (std::size_t i = 0; i < 4; ++i) dy[i] = 2.0 * (y[i] - 2.0 * x[i]) / 4.0;
    f.backward(dy);
    if (kl_weight > 0.0) f.add_kl_grad(kl_weight);
    adam.step(f.parameters());
  }
  return f.mu_weight().value[0];
}

}  // namespace

TEST(Elbo, StrongPriorShrinksTowardZero) {
  const double plain = fit_toy_regression(0.0);
  const double shrunk = fit_toy_regression(5.0);
  EXPECT_NEAR(plain, 2.0, 0.1);
  EXPECT_LT(std::abs(shrunk), std::abs(plain) - 0.5);
}

class UqGradients : public ::testing::TestWithParam<LayerSpec> {};

TEST_P(UqGradients, FrozenNoiseTwentySeeds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LT(grad_check(GetParam(), seed).max_rel_error, 1e-5) << to_string(GetParam().kind) << " seed " << seed;
  }
}

namespace {

std::vector<LayerSpec> uq_specs() {
  LayerSpec flip{LayerKind::FlipoutDense, 4, 3};
  LayerSpec drop{LayerKind::Dropout, 3};
  drop.length = 5;
  drop.rate = 0.3;
  LayerSpec dcd{LayerKind::DropConnectDense, 4, 3};
  dcd.rate = 0.25;
  LayerSpec dcc{LayerKind::DropConnectConv1d, 2, 3, 4};
  dcc.length = 9;
  dcc.rate = 0.25;
  return {flip, drop, dcd, dcc};
}

}  // namespace

INSTANTIATE_TEST_SUITE_P(AllUqLayers, UqGradients, ::testing::ValuesIn(uq_specs()),
                         [](const auto& info) { return std::string(to_string(info.param.kind)); });
