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

#include "dptldm/downstream.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dptldm/random.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dptldm {
namespace {

// Two Gaussian blobs centered at (-2, -2) and (2, 2).
void Blobs(size_t n, uint64_t seed, Eigen::MatrixXd& x, std::vector<int>& y) {
  Rng rng(seed);
  x.resize(n, 2);
  y.resize(n);
  for (size_t i = 0; i < n; ++i) {
    y[i] = i % 2;
    const double c = y[i] ? 2.0 : -2.0;
    x(i, 0) = c + 0.7 * rng.Normal();
    x(i, 1) = c + 0.7 * rng.Normal();
  }
}

double ReferenceMacroF1(const std::vector<int>& t, const std::vector<int>& p) {
  std::set<int> labels(t.begin(), t.end());
  labels.insert(p.begin(), p.end());
  double sum = 0.0;
  for (int c : labels) {
    int tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < t.size(); ++i) {
      tp += t[i] == c && p[i] == c;
      fp += t[i] != c && p[i] == c;
      fn += t[i] == c && p[i] != c;
    }
    sum += tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return sum / labels.size();
}

double ReferenceD2(const std::vector<double>& t, const std::vector<double>& p) {
  std::vector<double> sorted = t;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  const double med = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    num += std::abs(t[i] - p[i]);
    den += std::abs(t[i] - med);
  }
  if (den == 0.0) return num == 0.0 ? 1.0 : 0.0;
  return std::clamp(1.0 - num / den, 0.0, 1.0);
}

TEST(ClassifierTest, SeparableBlobs) {
  Eigen::MatrixXd x;
  std::vector<int> y;
  Blobs(100, 1, x, y);
  absl::StatusOr<TreeEnsemble> m = FitClassifier(x, y);
  ASSERT_OK(m);
  const Eigen::VectorXd p = *PredictProba(*m, x);
  int correct = 0;
  for (size_t i = 0; i < y.size(); ++i) correct += (p(i) > 0.5) == (y[i] == 1);
  EXPECT_GE(correct / 100.0, 0.95);
  EXPECT_TRUE((p.array() > 0).all() && (p.array() < 1).all());
}

TEST(ClassifierTest, ConstantFeaturesGivePrior) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(100, 3);
  std::vector<int> y(100, 0);
  for (int i = 0; i < 30; ++i) y[i] = 1;
  const Eigen::VectorXd p = *PredictProba(*FitClassifier(x, y), x);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p(i), 0.3, 0.02);
}

TEST(ClassifierTest, RowOrderDoesNotMatter) {
  Eigen::MatrixXd x;
  std::vector<int> y;
  Blobs(80, 2, x, y);
  // Duplicate coordinates force tie-breaking between candidate splits.
  x.col(1) = x.col(0);
  std::vector<size_t> perm(80);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(3);
  for (size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.UniformInt(i + 1)]);
  Eigen::MatrixXd xp(80, 2);
  std::vector<int> yp(80);
  for (size_t i = 0; i < 80; ++i) {
    xp.row(i) = x.row(perm[i]);
    yp[i] = y[perm[i]];
  }
  Eigen::MatrixXd query;
  std::vector<int> unused;
  Blobs(50, 4, query, unused);
  const Eigen::VectorXd a = *PredictProba(*FitClassifier(x, y), query);
  const Eigen::VectorXd b = *PredictProba(*FitClassifier(xp, yp), query);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ClassifierTest, Errors) {
  EXPECT_FALSE(FitClassifier(Eigen::MatrixXd::Zero(4, 1), {0, 0, 0, 0}).ok());
  EXPECT_FALSE(FitClassifier(Eigen::MatrixXd::Zero(4, 1), {0, 1, 0}).ok());
  EXPECT_FALSE(FitClassifier(Eigen::MatrixXd::Zero(1, 1), {1}).ok());
  const TreeEnsemble m = *FitClassifier(Eigen::MatrixXd::Zero(4, 2), {0, 1, 0, 1});
  EXPECT_FALSE(PredictProba(m, Eigen::MatrixXd::Zero(2, 3)).ok());
  EXPECT_FALSE(Predict(m, Eigen::MatrixXd::Zero(2, 2)).ok());
}

TEST(ClassifierTest, ZeroTreesAndPositiveLeaf) {
  TreeEnsemble m(BoostingLoss::kLogistic, 1, 0.0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 1);
  const Eigen::VectorXd p0 = *PredictProba(m, x);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(p0(i), 0.5);
  m.AddTree(RegressionTree::Constant(0.4));
  const Eigen::VectorXd p1 = *PredictProba(m, x);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_GT(p1(i), 0.5);
}

TEST(ClassifierTest, TrainingLossNonIncreasing) {
  Eigen::MatrixXd x;
  std::vector<int> y;
  Blobs(120, 5, x, y);
  for (size_t i = 0; i < 120; i += 7) y[i] = 1 - y[i];  // label noise
  const TreeEnsemble m = *FitClassifier(x, y, {60, 3, 0.3, 1.0, 1.0});
  const std::vector<double>& h = m.loss_history();
  ASSERT_EQ(h.size(), 61u);
  for (size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] + 1e-12) << i;
  for (const RegressionTree& t : m.trees()) {
    for (const TreeNode& node : t.nodes()) {
      EXPECT_LT(node.feature, 2);
      EXPECT_TRUE(std::isfinite(node.value));
    }
  }
}

TEST(RegressorTest, ConstantTarget) {
  Rng rng(6);
  Eigen::MatrixXd x(50, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.Normal();
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(50, 3.25);
  const Eigen::VectorXd p = *Predict(*FitRegressor(x, y), x);
  EXPECT_LE((p.array() - 3.25).abs().maxCoeff(), 1e-9);
}

TEST(RegressorTest, IdentityOnGrid) {
  Eigen::MatrixXd x(200, 1);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) x(i, 0) = y(i) = i / 199.0;
  const TreeEnsemble m = *FitRegressor(x, y, {50, 3, 0.1, 1.0, 1.0});
  const Eigen::VectorXd p = *Predict(m, x);
  const double mse = (p - y).squaredNorm() / 200;
  const double var = (y.array() - y.mean()).square().sum() / 200;
  EXPECT_LE(mse, 0.1 * var);
  EXPECT_EQ(*Predict(*FitRegressor(x, y, {50, 3, 0.1, 1.0, 1.0}), x), p);
  for (size_t i = 1; i < m.loss_history().size(); ++i) {
    EXPECT_LE(m.loss_history()[i], m.loss_history()[i - 1] + 1e-12);
  }
}

TEST(LabelClassifierTest, ThreeClasses) {
  Rng rng(7);
  Eigen::MatrixXd x(150, 1);
  std::vector<int> y(150);
  for (int i = 0; i < 150; ++i) {
    y[i] = 5 + i % 3;
    x(i, 0) = 4.0 * (i % 3) + 0.5 * rng.Normal();
  }
  const LabelClassifier m = *LabelClassifier::Fit(x, y);
  EXPECT_EQ(m.classes(), (std::vector<int>{5, 6, 7}));
  const std::vector<int> pred = *m.PredictLabels(x);
  EXPECT_GE(*MacroF1(y, pred), 0.95);
  EXPECT_FALSE(LabelClassifier::Fit(x, std::vector<int>(150, 1)).ok());
}

TEST(KFoldTest, SizesAndDeterminism) {
  const auto folds = *KFoldIndices(9, 3, 1);
  ASSERT_EQ(folds.size(), 3u);
  std::vector<size_t> all;
  for (const auto& f : folds) {
    EXPECT_EQ(f.size(), 3u);
    all.insert(all.end(), f.begin(), f.end());
  }
  std::sort(all.begin(), all.end());
  for (size_t i = 0; i < 9; ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(*KFoldIndices(9, 3, 1), folds);
  const auto uneven = *KFoldIndices(10, 3, 2);
  for (const auto& f : uneven) EXPECT_TRUE(f.size() == 3 || f.size() == 4);
  EXPECT_FALSE(KFoldIndices(2, 3, 0).ok());
  EXPECT_FALSE(KFoldIndices(10, 1, 0).ok());
}

TEST(KFoldTest, ClassificationScoresAndSkips) {
  Eigen::MatrixXd x;
  std::vector<int> labels;
  Blobs(60, 8, x, labels);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) y(i) = labels[i];
  const auto scores = *KFoldCv(x, y, 3, Task::kClassification, {}, 1);
  ASSERT_EQ(scores.size(), 3u);
  for (const FoldScore& s : scores) {
    EXPECT_FALSE(s.skipped);
    EXPECT_GE(s.score, 0.0);
    EXPECT_LE(s.score, 1.0);
  }
  // A single positive can leave every training part of some fold one-class.
  Eigen::VectorXd rare = Eigen::VectorXd::Zero(60);
  rare(0) = 1;
  const auto rare_scores = *KFoldCv(x, rare, 3, Task::kClassification, {}, 1);
  EXPECT_EQ(std::count_if(rare_scores.begin(), rare_scores.end(),
                          [](const FoldScore& s) { return s.skipped; }),
            1);
}

TEST(KFoldTest, Regression) {
  Eigen::MatrixXd x(90, 1);
  Eigen::VectorXd y(90);
  for (int i = 0; i < 90; ++i) x(i, 0) = y(i) = i;
  const std::vector<FoldScore> scores = *KFoldCv(x, y, 3, Task::kRegression, {}, 2);
  for (const FoldScore& s : scores) {
    EXPECT_GT(s.score, 0.8);
    EXPECT_LE(s.score, 1.0);
  }
}

TEST(MacroF1Test, Examples) {
  EXPECT_DOUBLE_EQ(*MacroF1({0, 1, 2, 1}, {0, 1, 2, 1}), 1.0);
  EXPECT_NEAR(*MacroF1({0, 0, 1, 1}, {0, 0, 0, 0}), 1.0 / 3, 1e-15);
  EXPECT_DOUBLE_EQ(*MacroF1({0, 0, 1, 1}, {1, 1, 0, 0}), *MacroF1({1, 1, 0, 0}, {0, 0, 1, 1}));
  EXPECT_FALSE(MacroF1({}, {}).ok());
  EXPECT_FALSE(MacroF1({0}, {0, 1}).ok());
}

TEST(MacroF1Test, MatchesReference) {
  Rng rng(9);
  for (int c = 0; c < 100; ++c) {
    const size_t n = 1 + rng.UniformInt(20);
    const int k = 2 + rng.UniformInt(3);
    std::vector<int> t(n), p(n);
    for (size_t i = 0; i < n; ++i) {
      t[i] = rng.UniformInt(k);
      p[i] = rng.UniformInt(k);
    }
    EXPECT_NEAR(*MacroF1(t, p), ReferenceMacroF1(t, p), 1e-14);
  }
}

TEST(D2Test, Examples) {
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 10;
  EXPECT_DOUBLE_EQ(*D2AbsoluteError(y, y), 1.0);
  EXPECT_DOUBLE_EQ(*D2AbsoluteError(y, Eigen::VectorXd::Constant(4, 2.5)), 0.0);
  EXPECT_DOUBLE_EQ(*D2AbsoluteError(y, Eigen::VectorXd::Constant(4, 100)), 0.0);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(3, 2.0);
  EXPECT_DOUBLE_EQ(*D2AbsoluteError(c, c), 1.0);
  EXPECT_DOUBLE_EQ(*D2AbsoluteError(c, c.array() + 1), 0.0);
  EXPECT_FALSE(D2AbsoluteError(Eigen::VectorXd(0), Eigen::VectorXd(0)).ok());
}

TEST(D2Test, MatchesReference) {
  Rng rng(10);
  for (int c = 0; c < 100; ++c) {
    const size_t n = 1 + rng.UniformInt(15);
    std::vector<double> t(n), p(n);
    Eigen::VectorXd te(n), pe(n);
    for (size_t i = 0; i < n; ++i) {
      te(i) = t[i] = std::round(4 * rng.Normal());
      pe(i) = p[i] = t[i] + (rng.Bernoulli(0.3) ? 0.0 : rng.Normal() * 3);
    }
    EXPECT_NEAR(*D2AbsoluteError(te, pe), ReferenceD2(t, p), 1e-14);
  }
}

TEST(MedianTest, OddAndEven) {
  EXPECT_EQ(Median({3, 1, 2}), 2.0);
  EXPECT_EQ(Median({4, 1, 3, 2}), 2.5);
}

TEST(KdeTest, SinglePointAtMode) {
  const KernelDensity kd = *KernelDensity::Fit(Eigen::MatrixXd::Zero(1, 3), 1.0);
  EXPECT_NEAR(kd.LogPdf(Eigen::RowVectorXd::Zero(3)), -1.5 * std::log(2 * M_PI), 1e-14);
}

TEST(KdeTest, DecreasesAwayFromCluster) {
  Rng rng(11);
  Eigen::MatrixXd s(50, 2);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = 0.1 * rng.Normal();
  const KernelDensity kd = *KernelDensity::Fit(s);
  EXPECT_GT(kd.bandwidth(), 0.0);
  Eigen::RowVectorXd far(2);
  far << 5 * kd.bandwidth(), 0;
  EXPECT_GT(kd.LogPdf(Eigen::RowVectorXd::Zero(2)), kd.LogPdf(far));
  EXPECT_TRUE(std::isfinite(kd.LogPdf(Eigen::RowVectorXd::Constant(2, 1e3))));
}

TEST(KdeTest, IntegratesToOne) {
  Eigen::MatrixXd s(3, 1);
  s << -0.4, 0.1, 0.9;
  const KernelDensity kd = *KernelDensity::Fit(s, 0.5);
  const double lo = -0.4 - 10 * 0.5, hi = 0.9 + 10 * 0.5;
  const int n = 4000;
  const double dx = (hi - lo) / n;
  double integral = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    integral += w * std::exp(kd.LogPdf(Eigen::RowVectorXd::Constant(1, lo + i * dx))) * dx;
  }
  EXPECT_NEAR(integral, 1.0, 0.01);
}

TEST(KdeTest, PermutationInvariant) {
  Eigen::MatrixXd s(4, 2);
  s << 0, 1, 2, 3, -1, 0.5, 4, 4;
  Eigen::MatrixXd r = s.colwise().reverse();
  const KernelDensity a = *KernelDensity::Fit(s);
  const KernelDensity b = *KernelDensity::Fit(r);
  Eigen::RowVectorXd q(2);
  q << 0.3, 0.7;
  EXPECT_NEAR(a.LogPdf(q), b.LogPdf(q), 1e-13);
}

TEST(KdeTest, Errors) {
  EXPECT_FALSE(KernelDensity::Fit(Eigen::MatrixXd::Zero(1, 2)).ok());
  EXPECT_FALSE(KernelDensity::Fit(Eigen::MatrixXd::Zero(5, 2)).ok());
  EXPECT_FALSE(KernelDensity::Fit(Eigen::MatrixXd::Zero(3, 1), 0.0).ok());
  EXPECT_FALSE(KernelDensity::Fit(Eigen::MatrixXd::Zero(0, 1), 1.0).ok());
}

}  // namespace
}  // namespace dptldm
