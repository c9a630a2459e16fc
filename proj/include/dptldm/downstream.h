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

// Supervised learners and density estimators used by the evaluation code:
// gradient-boosted regression trees, k-fold cross-validation, macro F1, the
// clipped D2 absolute-error score and a Gaussian kernel density estimator.

#ifndef DPTLDM_DOWNSTREAM_H_
#define DPTLDM_DOWNSTREAM_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "Eigen/Core"
#include "absl/status/statusor.h"

namespace dptldm {

struct BoostingParams {
  int num_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  double l2 = 1.0;  // lambda in the leaf weight -G / (H + lambda)
  double min_child_hessian = 1.0;
};

enum class BoostingLoss { kLogistic, kSquaredError };

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with x[feature] < threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, learning rate already applied
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  // A single leaf.
  static RegressionTree Constant(double value);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  double Predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

 private:
  std::vector<TreeNode> nodes_;
};

class TreeEnsemble {
 public:
  TreeEnsemble() = default;
  TreeEnsemble(BoostingLoss loss, size_t num_features, double base_score)
      : loss_(loss), num_features_(num_features), base_score_(base_score) {}

  BoostingLoss loss() const { return loss_; }
  size_t num_features() const { return num_features_; }
  double base_score() const { return base_score_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  // Training loss after the base score and after each tree.
  const std::vector<double>& loss_history() const { return loss_history_; }

  void AddTree(RegressionTree tree) { trees_.push_back(std::move(tree)); }
  void RecordLoss(double loss) { loss_history_.push_back(loss); }

  // base_score + sum of tree outputs.
  absl::StatusOr<Eigen::VectorXd> Margin(const Eigen::MatrixXd& x) const;

 private:
  BoostingLoss loss_ = BoostingLoss::kSquaredError;
  size_t num_features_ = 0;
  double base_score_ = 0.0;
  std::vector<RegressionTree> trees_;
  std::vector<double> loss_history_;
};

// Logistic boosting from margin 0. Labels must be 0/1 with both present.
// The fit does not depend on the order of the rows.
absl::StatusOr<TreeEnsemble> FitClassifier(const Eigen::MatrixXd& x,
                                           const std::vector<int>& y,
                                           const BoostingParams& params = {});
// Squared-error boosting from the mean of y.
absl::StatusOr<TreeEnsemble> FitRegressor(const Eigen::MatrixXd& x,
                                          const Eigen::VectorXd& y,
                                          const BoostingParams& params = {});

// Sigmoid of the margin; requires a logistic model.
absl::StatusOr<Eigen::VectorXd> PredictProba(const TreeEnsemble& model,
                                             const Eigen::MatrixXd& x);
// Margin of a squared-error model.
absl::StatusOr<Eigen::VectorXd> Predict(const TreeEnsemble& model,
                                        const Eigen::MatrixXd& x);

// Multiclass labels via one logistic model per class (a single model when
// there are two classes).
class LabelClassifier {
 public:
  static absl::StatusOr<LabelClassifier> Fit(const Eigen::MatrixXd& x,
                                             const std::vector<int>& y,
                                             const BoostingParams& params = {});

  const std::vector<int>& classes() const { return classes_; }
  // Highest-scoring class; ties go to the smaller label.
  absl::StatusOr<std::vector<int>> PredictLabels(const Eigen::MatrixXd& x) const;

 private:
  std::vector<int> classes_;
  std::vector<TreeEnsemble> models_;
};

enum class Task { kClassification, kRegression };

struct FoldScore {
  double score = 0.0;
  bool skipped = false;  // training part held a single class
};

// Shuffled k-fold split of {0, ..., n - 1}; fold sizes differ by at most one.
absl::StatusOr<std::vector<std::vector<size_t>>> KFoldIndices(size_t n, int k,
                                                              uint64_t seed);

// Classification folds are scored with macro F1, regression with D2.
absl::StatusOr<std::vector<FoldScore>> KFoldCv(const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y, int k,
                                               Task task,
                                               const BoostingParams& params,
                                               uint64_t seed);

// Mean of per-class F1 over the labels present in y_true or y_pred.
absl::StatusOr<double> MacroF1(const std::vector<int>& y_true,
                               const std::vector<int>& y_pred);

// 1 - sum|y - y_hat| / sum|y - median(y)|, clipped to [0, 1]. A zero
// denominator scores 1 for a perfect prediction and 0 otherwise.
absl::StatusOr<double> D2AbsoluteError(const Eigen::VectorXd& y_true,
                                       const Eigen::VectorXd& y_pred);

double Median(std::vector<double> values);

class KernelDensity {
 public:
  // Isotropic Gaussian kernels. Without a bandwidth, Scott's rule
  // n^{-1/(d+4)} times the pooled per-dimension standard deviation is used,
  // which needs at least two support points.
  static absl::StatusOr<KernelDensity> Fit(
      Eigen::MatrixXd support, std::optional<double> bandwidth = std::nullopt);

  double bandwidth() const { return bandwidth_; }
  size_t dim() const { return support_.cols(); }
  const Eigen::MatrixXd& support() const { return support_; }

  double LogPdf(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

 private:
  Eigen::MatrixXd support_;
  double bandwidth_ = 1.0;
};

}  // namespace dptldm

#endif  // DPTLDM_DOWNSTREAM_H_
