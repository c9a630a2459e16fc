// Copyright 2026 The DP-TLDM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dptldm/dp_optimizer.h"

#include <cmath>
#include <numeric>

#include "dptldm/status_macros.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dptldm {
namespace {

ParamGrads GradsWith(const Mlp& net, const std::vector<double>& flat) {
  ParamGrads g = ParamGrads::ZerosLike(net);
  g.Unflatten(flat);
  return g;
}

Mlp Linear(size_t in, size_t out, uint64_t seed) {
  Rng rng(seed);
  return Mlp::Initialize({in, out}, Activation::kIdentity, Activation::kIdentity, rng);
}

// Mean squared error of a linear model; the target is the batch's last column.
absl::StatusOr<ParamGrads> SquaredErrorGradient(const Mlp& net, const Eigen::MatrixXd& batch) {
  const Eigen::MatrixXd x = batch.leftCols(batch.cols() - 1);
  ASSIGN_OR_RETURN(Eigen::MatrixXd pred, net.Forward(x));
  const Eigen::MatrixXd upstream = 2.0 * (pred - batch.rightCols(1));
  ASSIGN_OR_RETURN(BackwardResult b, Backward(net, x, upstream));
  return b.grads;
}

double SquaredError(const Mlp& net, const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd pred = *net.Forward(data.leftCols(data.cols() - 1));
  return (pred - data.rightCols(1)).squaredNorm() / data.rows();
}

TEST(DpConfigTest, Validate) {
  EXPECT_OK(DpConfig{}.Validate());
  EXPECT_FALSE((DpConfig{0.0, 1.0, 0.1, 1}).Validate().ok());
  EXPECT_FALSE((DpConfig{1.0, -1.0, 0.1, 1}).Validate().ok());
  EXPECT_FALSE((DpConfig{1.0, 1.0, 0.0, 1}).Validate().ok());
  EXPECT_FALSE((DpConfig{1.0, 1.0, 1.5, 1}).Validate().ok());
  EXPECT_OK((DpConfig{1.0, 0.0, 1.0, 1}).Validate());
}

TEST(ClipTest, BelowBoundUnchanged) {
  const Mlp net = Linear(1, 1, 0);
  const ParamGrads g = GradsWith(net, {0.3, 0.4});  // norm 0.5
  absl::StatusOr<ParamGrads> c = ClipBatchGradient(g, 1.0);
  ASSERT_OK(c);
  EXPECT_EQ(c->Flatten(), g.Flatten());
}

TEST(ClipTest, AboveBoundScaledToBound) {
  const Mlp net = Linear(1, 1, 0);
  absl::StatusOr<ParamGrads> c = ClipBatchGradient(GradsWith(net, {1.2, 1.6}), 1.0);
  ASSERT_OK(c);
  EXPECT_DOUBLE_EQ(c->Flatten()[0], 0.6);
  EXPECT_DOUBLE_EQ(c->Flatten()[1], 0.8);
  EXPECT_NEAR(c->FlatNorm(), 1.0, 1e-15);
}

TEST(ClipTest, ZeroStaysZero) {
  const Mlp net = Linear(3, 2, 0);
  absl::StatusOr<ParamGrads> c = ClipBatchGradient(ParamGrads::ZerosLike(net), 1.0);
  ASSERT_OK(c);
  EXPECT_EQ(c->FlatNorm(), 0.0);
}

TEST(ClipTest, RejectsNonFinite) {
  const Mlp net = Linear(1, 1, 0);
  EXPECT_FALSE(ClipBatchGradient(GradsWith(net, {NAN, 0.0}), 1.0).ok());
  EXPECT_FALSE(ClipBatchGradient(GradsWith(net, {INFINITY, 0.0}), 1.0).ok());
}

TEST(ClipTest, NormNeverExceedsBound) {
  Rng rng(7);
  const Mlp net = Linear(4, 3, 0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(net.NumParameters());
    const double scale = std::exp(6 * rng.Uniform() - 3);
    for (double& x : v) x = scale * rng.Normal();
    absl::StatusOr<ParamGrads> c = ClipBatchGradient(GradsWith(net, v), 0.7);
    ASSERT_OK(c);
    EXPECT_LE(c->FlatNorm(), 0.7 * (1 + 1e-12));
  }
}

TEST(AddNoiseTest, ZeroSigmaIsIdentity) {
  const Mlp net = Linear(2, 2, 0);
  const ParamGrads g = GradsWith(net, {0.1, -0.2, 0.3, 0.0, 0.05, -0.05});
  Rng rng(1);
  const NoisyGradient n = AddNoise(g, 1.0, 0.0, rng);
  EXPECT_EQ(n.values.Flatten(), g.Flatten());
}

TEST(AddNoiseTest, EmpiricalStd) {
  const Mlp net = Linear(1000, 100, 0);  // 100100 coordinates
  Rng rng(2);
  const std::vector<double> v =
      AddNoise(ParamGrads::ZerosLike(net), 1.0, 0.2, rng).values.Flatten();
  const double n = v.size();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1));
  EXPECT_NEAR(sd, 0.2, 3 * 0.2 / std::sqrt(2 * n));
}

TEST(AddNoiseTest, ScalesWithClipNorm) {
  const Mlp net = Linear(1, 1, 0);
  Rng a(3);
  Rng b(3);
  const std::vector<double> x = AddNoise(ParamGrads::ZerosLike(net), 1.0, 0.5, a).values.Flatten();
  const std::vector<double> y = AddNoise(ParamGrads::ZerosLike(net), 4.0, 0.5, b).values.Flatten();
  for (size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(4 * x[i], y[i]);
}

TEST(AddNoiseTest, CoordinatesUncorrelated) {
  const Mlp net = Linear(1, 1, 0);
  Rng rng(4);
  const int n = 10000;
  const double sigma = 0.5;
  double sxy = 0.0, sx = 0.0, sy = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> v =
        AddNoise(ParamGrads::ZerosLike(net), 1.0, sigma, rng).values.Flatten();
    sx += v[0];
    sy += v[1];
    sxy += v[0] * v[1];
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  EXPECT_LE(std::abs(cov), 3 * sigma * sigma / std::sqrt(n));
}

TEST(AddNoiseTest, Deterministic) {
  const Mlp net = Linear(2, 1, 0);
  Rng a(5), b(5), c(6);
  const ParamGrads z = ParamGrads::ZerosLike(net);
  EXPECT_EQ(AddNoise(z, 1, 1, a).values.Flatten(), AddNoise(z, 1, 1, b).values.Flatten());
  Rng a2(5);
  EXPECT_NE(AddNoise(z, 1, 1, a2).values.Flatten(), AddNoise(z, 1, 1, c).values.Flatten());
}

TEST(PoissonSampleTest, RateOneTakesAll) {
  Rng rng(0);
  const std::vector<size_t> b = PoissonSample(50, 1.0, rng);
  ASSERT_EQ(b.size(), 50u);
  for (size_t i = 0; i < 50; ++i) EXPECT_EQ(b[i], i);
}

TEST(PoissonSampleTest, MeanBatchSize) {
  Rng rng(1);
  const int trials = 1000;
  double total = 0.0;
  for (int t = 0; t < trials; ++t) total += PoissonSample(10000, 0.01, rng).size();
  EXPECT_NEAR(total / trials, 100.0, 3 * std::sqrt(100 * 0.99) / std::sqrt(trials));
}

TEST(PoissonSampleTest, DeterministicAndSorted) {
  Rng a(2), b(2);
  const std::vector<size_t> x = PoissonSample(1000, 0.1, a);
  EXPECT_EQ(x, PoissonSample(1000, 0.1, b));
  EXPECT_TRUE(std::is_sorted(x.begin(), x.end()));
}

TEST(RoundsTest, Counts) {
  EXPECT_EQ(RoundsPerEpoch(0.1), 10);
  EXPECT_EQ(RoundsPerEpoch(0.3), 4);
  EXPECT_EQ(RoundsPerEpoch(1.0), 1);
  EXPECT_DOUBLE_EQ(TotalRounds(2000, 200, 7), 70.0);
}

TEST(DpGradientStepTest, NoNoiseLargeBoundMatchesBackprop) {
  const Mlp net = Linear(3, 1, 1);
  Rng data(3);
  Eigen::MatrixXd batch(8, 4);
  for (int i = 0; i < batch.size(); ++i) batch.data()[i] = data.Normal();
  Rng rng(0);
  absl::StatusOr<NoisyGradient> g =
      DpGradientStep(net, batch, SquaredErrorGradient, {1e12, 0.0, 0.1, 1}, rng);
  ASSERT_OK(g);
  EXPECT_FALSE(g->was_clipped);
  const std::vector<double> plain = SquaredErrorGradient(net, batch)->Flatten();
  EXPECT_LE(MaxRelativeError(g->values.Flatten(), plain), 1e-9);
}

TEST(DpGradientStepTest, NoNoiseClipsDirection) {
  const Mlp net = Linear(1, 1, 1);
  Eigen::MatrixXd batch(2, 2);
  batch << 1, 50, -1, -40;
  Rng rng(0);
  absl::StatusOr<NoisyGradient> g =
      DpGradientStep(net, batch, SquaredErrorGradient, {1.0, 0.0, 0.1, 1}, rng);
  ASSERT_OK(g);
  EXPECT_TRUE(g->was_clipped);
  const ParamGrads plain = *SquaredErrorGradient(net, batch);
  EXPECT_DOUBLE_EQ(g->pre_clip_norm, plain.FlatNorm());
  EXPECT_NEAR(g->values.FlatNorm(), 1.0, 1e-12);
  std::vector<double> expected = plain.Flatten();
  for (double& x : expected) x /= plain.FlatNorm();
  EXPECT_LE(MaxRelativeError(g->values.Flatten(), expected), 1e-12);
}

TEST(DpGradientStepTest, IdenticalRowsEqualSingleRow) {
  const Mlp net = Linear(2, 1, 2);
  Eigen::MatrixXd one(1, 3);
  one << 0.5, -1.0, 2.0;
  const Eigen::MatrixXd many = one.replicate(6, 1);
  Rng a(0), b(0);
  const DpConfig cfg{1.0, 0.0, 0.1, 1};
  const std::vector<double> x = DpGradientStep(net, one, SquaredErrorGradient, cfg, a)->values.Flatten();
  const std::vector<double> y = DpGradientStep(net, many, SquaredErrorGradient, cfg, b)->values.Flatten();
  EXPECT_LE(MaxRelativeError(x, y), 1e-12);
}

TEST(DpGradientStepTest, RejectsEmptyBatchAndNonFinite) {
  const Mlp net = Linear(1, 1, 0);
  Rng rng(0);
  EXPECT_FALSE(DpGradientStep(net, Eigen::MatrixXd(0, 2), SquaredErrorGradient, {}, rng).ok());
  Eigen::MatrixXd bad(1, 2);
  bad << NAN, 1.0;
  EXPECT_FALSE(DpGradientStep(net, bad, SquaredErrorGradient, {}, rng).ok());
}

// Noisy clipped SGD on y = 2 x1 - x2 + 0.5 still makes progress.
TEST(DpGradientStepTest, LinearRegressionConverges) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    Eigen::MatrixXd data(400, 3);
    for (int i = 0; i < 400; ++i) {
      const double x1 = rng.Normal(), x2 = rng.Normal();
      data.row(i) << x1, x2, 2 * x1 - x2 + 0.5 + 0.1 * rng.Normal();
    }
    Mlp net = Linear(2, 1, seed);
    const double initial = SquaredError(net, data);
    const DpConfig cfg{1.0, 0.1, 0.1, 1};
    for (int step = 0; step < 200; ++step) {
      const std::vector<size_t> idx = PoissonSample(400, cfg.sampling_rate, rng);
      if (idx.empty()) continue;
      absl::StatusOr<NoisyGradient> g =
          DpGradientStep(net, data(idx, Eigen::all), SquaredErrorGradient, cfg, rng);
      ASSERT_OK(g);
      ParamGrads step_grads = g->values;
      step_grads.Scale(-0.1);
      for (size_t l = 0; l < net.layers().size(); ++l) {
        net.mutable_layers()[l].weight += step_grads.layers()[l].weight;
        net.mutable_layers()[l].bias += step_grads.layers()[l].bias;
      }
    }
    EXPECT_LT(SquaredError(net, data), 0.5 * initial) << "seed " << seed;
  }
}

TEST(DpAutoencoderStepTest, ClipsNetworksIndependently) {
  const TableSchema s = MakeSchema({{"x", ColumnKind::kContinuous, {}},
                                    {"c", ColumnKind::kCategorical, {"a", "b"}}});
  const Encoding enc = *Encoding::Fit(MakeDataset(s, {{1, 2, 30, 4}, {0, 1, 0, 1}}));
  Rng init(0);
  const AutoencoderModel m = AutoencoderModel::Initialize(enc, {1, {4}}, init);
  Eigen::MatrixXd batch(2, 3);
  batch << 8, 1, 0, -9, 0, 1;
  Rng rng(1);
  absl::StatusOr<DpAutoencoderGradients> g = DpAutoencoderStep(m, batch, {0.01, 0.0, 0.1, 1}, rng);
  ASSERT_OK(g);
  EXPECT_TRUE(std::isfinite(g->loss));
  EXPECT_LE(g->encoder.values.FlatNorm(), 0.01 * (1 + 1e-12));
  EXPECT_LE(g->decoder.values.FlatNorm(), 0.01 * (1 + 1e-12));
  EXPECT_GT(g->decoder.pre_clip_norm, 0.01);
}

}  // namespace
}  // namespace dptldm
