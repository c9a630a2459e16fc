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
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptldm/random.h"
#include "dptldm/status_macros.h"

namespace dptldm {
namespace {

constexpr double kMinSplitGain = 1e-12;

double Sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

// log(1 + e^m)
double Softplus(double m) {
  return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

absl::Status CheckParams(const BoostingParams& p) {
  if (p.num_trees < 0 || p.max_depth < 0) {
    return absl::InvalidArgumentError("boosting: negative tree count or depth");
  }
  if (!(p.learning_rate > 0.0) || !(p.l2 >= 0.0) || !(p.min_child_hessian >= 0.0)) {
    return absl::InvalidArgumentError("boosting: invalid learning rate or penalty");
  }
  return absl::OkStatus();
}

// Lexicographic row order on (features, target): makes fitting independent
// of the input row order, including the order of floating-point sums.
std::vector<size_t> CanonicalOrder(const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y) {
  std::vector<size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      if (x(a, f) != x(b, f)) return x(a, f) < x(b, f);
    }
    return y(a) < y(b);
  });
  return order;
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const BoostingParams& params)
      : x_(x), params_(params), sorted_(x.cols()), in_node_(x.rows(), 0) {
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      auto& idx = sorted_[f];
      idx.resize(x.rows());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(),
                       [&](size_t a, size_t b) { return x(a, f) < x(b, f); });
    }
  }

  RegressionTree Build(const std::vector<double>& g, const std::vector<double>& h) {
    g_ = &g;
    h_ = &h;
    nodes_.clear();
    std::vector<size_t> all(x_.rows());
    std::iota(all.begin(), all.end(), 0);
    Grow(all, 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  struct Split {
    double gain = kMinSplitGain;
    int feature = -1;
    double threshold = 0.0;
  };

  int Grow(const std::vector<size_t>& rows, int depth) {
    double g_sum = 0.0;
    double h_sum = 0.0;
    for (size_t r : rows) {
      g_sum += (*g_)[r];
      h_sum += (*h_)[r];
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{});
    nodes_[id].value = -params_.learning_rate * g_sum / (h_sum + params_.l2);
    if (depth >= params_.max_depth || rows.size() < 2) return id;
    const Split split = BestSplit(rows, g_sum, h_sum);
    if (split.feature < 0) return id;
    std::vector<size_t> left;
    std::vector<size_t> right;
    for (size_t r : rows) {
      (x_(r, split.feature) < split.threshold ? left : right).push_back(r);
    }
    const int l = Grow(left, depth + 1);
    const int rt = Grow(right, depth + 1);
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    nodes_[id].left = l;
    nodes_[id].right = rt;
    return id;
  }

  // First strictly best candidate in (feature, threshold) order wins.
  Split BestSplit(const std::vector<size_t>& rows, double g_sum, double h_sum) {
    for (size_t r : rows) in_node_[r] = 1;
    const double lambda = params_.l2;
    const double parent = g_sum * g_sum / (h_sum + lambda);
    Split best;
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      double gl = 0.0;
      double hl = 0.0;
      bool have_prev = false;
      double prev = 0.0;
      for (size_t r : sorted_[f]) {
        if (!in_node_[r]) continue;
        const double v = x_(r, f);
        if (have_prev && v > prev) {
          const double hr = h_sum - hl;
          if (hl >= params_.min_child_hessian && hr >= params_.min_child_hessian) {
            const double gr = g_sum - gl;
            const double gain =
                gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
            if (gain > best.gain) {
              double threshold = 0.5 * (prev + v);
              if (!(threshold > prev)) threshold = v;
              best = {gain, static_cast<int>(f), threshold};
            }
          }
        }
        gl += (*g_)[r];
        hl += (*h_)[r];
        prev = v;
        have_prev = true;
      }
    }
    for (size_t r : rows) in_node_[r] = 0;
    return best;
  }

  const Eigen::MatrixXd& x_;
  const BoostingParams& params_;
  std::vector<std::vector<size_t>> sorted_;
  std::vector<char> in_node_;
  const std::vector<double>* g_ = nullptr;
  const std::vector<double>* h_ = nullptr;
  std::vector<TreeNode> nodes_;
};

double MeanLoss(BoostingLoss loss, const Eigen::VectorXd& margin,
                const Eigen::VectorXd& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (loss == BoostingLoss::kLogistic) {
      total += Softplus(margin(i)) - y(i) * margin(i);
    } else {
      const double d = margin(i) - y(i);
      total += 0.5 * d * d;
    }
  }
  return total / y.size();
}

absl::StatusOr<TreeEnsemble> Boost(const Eigen::MatrixXd& x_in,
                                   const Eigen::VectorXd& y_in,
                                   BoostingLoss loss, double base_score,
                                   const BoostingParams& params) {
  RETURN_IF_ERROR(CheckParams(params));
  if (!x_in.allFinite() || !y_in.allFinite()) {
    return absl::InvalidArgumentError("boosting: non-finite inputs");
  }
  const std::vector<size_t> order = CanonicalOrder(x_in, y_in);
  Eigen::MatrixXd x(x_in.rows(), x_in.cols());
  Eigen::VectorXd y(y_in.size());
  for (size_t i = 0; i < order.size(); ++i) {
    x.row(i) = x_in.row(order[i]);
    y(i) = y_in(order[i]);
  }
  const size_t n = x.rows();
  TreeEnsemble model(loss, x.cols(), base_score);
  Eigen::VectorXd margin = Eigen::VectorXd::Constant(n, base_score);
  model.RecordLoss(MeanLoss(loss, margin, y));
  TreeBuilder builder(x, params);
  std::vector<double> g(n);
  std::vector<double> h(n);
  for (int t = 0; t < params.num_trees; ++t) {
    for (size_t i = 0; i < n; ++i) {
      if (loss == BoostingLoss::kLogistic) {
        const double p = Sigmoid(margin(i));
        g[i] = p - y(i);
        h[i] = p * (1.0 - p);
      } else {
        g[i] = margin(i) - y(i);
        h[i] = 1.0;
      }
    }
    RegressionTree tree = builder.Build(g, h);
    for (size_t i = 0; i < n; ++i) margin(i) += tree.Predict(x.row(i));
    model.AddTree(std::move(tree));
    model.RecordLoss(MeanLoss(loss, margin, y));
  }
  return model;
}

absl::Status CheckRows(const Eigen::MatrixXd& x, size_t labels) {
  if (static_cast<size_t>(x.rows()) != labels) {
    return absl::InvalidArgumentError("features and labels differ in length");
  }
  if (x.rows() < 2) return absl::InvalidArgumentError("need at least two rows");
  return absl::OkStatus();
}

}  // namespace

RegressionTree RegressionTree::Constant(double value) {
  TreeNode leaf;
  leaf.value = value;
  return RegressionTree({leaf});
}

double RegressionTree::Predict(
    const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  if (nodes_.empty()) return 0.0;
  int id = 0;
  while (nodes_[id].feature >= 0) {
    const TreeNode& node = nodes_[id];
    id = row(node.feature) < node.threshold ? node.left : node.right;
  }
  return nodes_[id].value;
}

absl::StatusOr<Eigen::VectorXd> TreeEnsemble::Margin(
    const Eigen::MatrixXd& x) const {
  if (static_cast<size_t>(x.cols()) != num_features_) {
    return absl::InvalidArgumentError(absl::StrCat(
        "model expects ", num_features_, " features, got ", x.cols()));
  }
  Eigen::VectorXd margin = Eigen::VectorXd::Constant(x.rows(), base_score_);
  for (const RegressionTree& tree : trees_) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) margin(i) += tree.Predict(x.row(i));
  }
  return margin;
}

absl::StatusOr<TreeEnsemble> FitClassifier(const Eigen::MatrixXd& x,
                                           const std::vector<int>& y,
                                           const BoostingParams& params) {
  RETURN_IF_ERROR(CheckRows(x, y.size()));
  Eigen::VectorXd target(y.size());
  bool has0 = false;
  bool has1 = false;
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) {
      return absl::InvalidArgumentError("classifier labels must be 0 or 1");
    }
    (y[i] == 0 ? has0 : has1) = true;
    target(i) = y[i];
  }
  if (!has0 || !has1) {
    return absl::InvalidArgumentError("classifier needs both classes present");
  }
  return Boost(x, target, BoostingLoss::kLogistic, 0.0, params);
}

absl::StatusOr<TreeEnsemble> FitRegressor(const Eigen::MatrixXd& x,
                                          const Eigen::VectorXd& y,
                                          const BoostingParams& params) {
  RETURN_IF_ERROR(CheckRows(x, y.size()));
  return Boost(x, y, BoostingLoss::kSquaredError, y.mean(), params);
}

absl::StatusOr<Eigen::VectorXd> PredictProba(const TreeEnsemble& model,
                                             const Eigen::MatrixXd& x) {
  if (model.loss() != BoostingLoss::kLogistic) {
    return absl::InvalidArgumentError("PredictProba needs a logistic model");
  }
  ASSIGN_OR_RETURN(Eigen::VectorXd margin, model.Margin(x));
  return margin.unaryExpr([](double m) { return Sigmoid(m); }).eval();
}

absl::StatusOr<Eigen::VectorXd> Predict(const TreeEnsemble& model,
                                        const Eigen::MatrixXd& x) {
  if (model.loss() != BoostingLoss::kSquaredError) {
    return absl::InvalidArgumentError("Predict needs a squared-error model");
  }
  return model.Margin(x);
}

absl::StatusOr<LabelClassifier> LabelClassifier::Fit(const Eigen::MatrixXd& x,
                                                     const std::vector<int>& y,
                                                     const BoostingParams& params) {
  RETURN_IF_ERROR(CheckRows(x, y.size()));
  LabelClassifier out;
  const std::set<int> classes(y.begin(), y.end());
  out.classes_.assign(classes.begin(), classes.end());
  if (out.classes_.size() < 2) {
    return absl::InvalidArgumentError("classifier needs at least two classes");
  }
  const size_t first = out.classes_.size() == 2 ? 1 : 0;
  for (size_t k = first; k < out.classes_.size(); ++k) {
    std::vector<int> binary(y.size());
    for (size_t i = 0; i < y.size(); ++i) binary[i] = y[i] == out.classes_[k];
    ASSIGN_OR_RETURN(TreeEnsemble model, FitClassifier(x, binary, params));
    out.models_.push_back(std::move(model));
  }
  return out;
}

absl::StatusOr<std::vector<int>> LabelClassifier::PredictLabels(
    const Eigen::MatrixXd& x) const {
  std::vector<int> labels(x.rows());
  if (classes_.size() == 2) {
    ASSIGN_OR_RETURN(Eigen::VectorXd p, PredictProba(models_[0], x));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      labels[i] = p(i) > 0.5 ? classes_[1] : classes_[0];
    }
    return labels;
  }
  Eigen::MatrixXd scores(x.rows(), classes_.size());
  for (size_t k = 0; k < classes_.size(); ++k) {
    ASSIGN_OR_RETURN(Eigen::VectorXd p, PredictProba(models_[k], x));
    scores.col(k) = p;
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k) {
      if (scores(i, k) > scores(i, best)) best = k;
    }
    labels[i] = classes_[best];
  }
  return labels;
}

absl::StatusOr<std::vector<std::vector<size_t>>> KFoldIndices(size_t n, int k,
                                                              uint64_t seed) {
  if (k < 2 || n < static_cast<size_t>(k)) {
    return absl::InvalidArgumentError("k-fold: need k >= 2 and N >= k");
  }
  Rng rng(seed);
  const std::vector<size_t> perm = rng.Permutation(n);
  std::vector<std::vector<size_t>> folds(k);
  for (size_t i = 0; i < n; ++i) folds[i % k].push_back(perm[i]);
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

absl::StatusOr<std::vector<FoldScore>> KFoldCv(const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y, int k,
                                               Task task,
                                               const BoostingParams& params,
                                               uint64_t seed) {
  if (x.rows() != y.size()) {
    return absl::InvalidArgumentError("features and targets differ in length");
  }
  ASSIGN_OR_RETURN(auto folds, KFoldIndices(x.rows(), k, seed));
  std::vector<FoldScore> scores;
  std::vector<char> held(x.rows());
  for (const auto& fold : folds) {
    std::fill(held.begin(), held.end(), 0);
    for (size_t i : fold) held[i] = 1;
    std::vector<size_t> train;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (!held[i]) train.push_back(i);
    }
    Eigen::MatrixXd x_train(train.size(), x.cols());
    Eigen::MatrixXd x_test(fold.size(), x.cols());
    for (size_t i = 0; i < train.size(); ++i) x_train.row(i) = x.row(train[i]);
    for (size_t i = 0; i < fold.size(); ++i) x_test.row(i) = x.row(fold[i]);
    FoldScore score;
    if (task == Task::kClassification) {
      std::vector<int> y_train(train.size());
      std::vector<int> y_test(fold.size());
      for (size_t i = 0; i < train.size(); ++i) y_train[i] = std::lround(y(train[i]));
      for (size_t i = 0; i < fold.size(); ++i) y_test[i] = std::lround(y(fold[i]));
      if (std::set<int>(y_train.begin(), y_train.end()).size() < 2) {
        score.skipped = true;
        scores.push_back(score);
        continue;
      }
      ASSIGN_OR_RETURN(LabelClassifier model,
                       LabelClassifier::Fit(x_train, y_train, params));
      ASSIGN_OR_RETURN(std::vector<int> predicted, model.PredictLabels(x_test));
      ASSIGN_OR_RETURN(score.score, MacroF1(y_test, predicted));
    } else {
      Eigen::VectorXd y_train(train.size());
      Eigen::VectorXd y_test(fold.size());
      for (size_t i = 0; i < train.size(); ++i) y_train(i) = y(train[i]);
      for (size_t i = 0; i < fold.size(); ++i) y_test(i) = y(fold[i]);
      ASSIGN_OR_RETURN(TreeEnsemble model, FitRegressor(x_train, y_train, params));
      ASSIGN_OR_RETURN(Eigen::VectorXd predicted, Predict(model, x_test));
      ASSIGN_OR_RETURN(score.score, D2AbsoluteError(y_test, predicted));
    }
    scores.push_back(score);
  }
  return scores;
}

absl::StatusOr<double> MacroF1(const std::vector<int>& y_true,
                               const std::vector<int>& y_pred) {
  if (y_true.empty() || y_true.size() != y_pred.size()) {
    return absl::InvalidArgumentError("macro F1: empty or mismatched inputs");
  }
  struct Counts {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
  };
  std::map<int, Counts> counts;
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == y_pred[i]) {
      ++counts[y_true[i]].tp;
    } else {
      ++counts[y_true[i]].fn;
      ++counts[y_pred[i]].fp;
    }
  }
  double total = 0.0;
  for (const auto& [label, c] : counts) {
    total += 2.0 * c.tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
  }
  return total / counts.size();
}

double Median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

absl::StatusOr<double> D2AbsoluteError(const Eigen::VectorXd& y_true,
                                       const Eigen::VectorXd& y_pred) {
  if (y_true.size() == 0 || y_true.size() != y_pred.size()) {
    return absl::InvalidArgumentError("D2: empty or mismatched inputs");
  }
  const double median =
      Median(std::vector<double>(y_true.data(), y_true.data() + y_true.size()));
  const double numerator = (y_true - y_pred).cwiseAbs().sum();
  const double denominator = (y_true.array() - median).abs().sum();
  if (denominator == 0.0) return numerator == 0.0 ? 1.0 : 0.0;
  return std::clamp(1.0 - numerator / denominator, 0.0, 1.0);
}

absl::StatusOr<KernelDensity> KernelDensity::Fit(Eigen::MatrixXd support,
                                                 std::optional<double> bandwidth) {
  if (support.rows() == 0 || support.cols() == 0) {
    return absl::InvalidArgumentError("KDE: empty support");
  }
  if (!support.allFinite()) return absl::InvalidArgumentError("KDE: non-finite support");
  double h = 0.0;
  if (bandwidth.has_value()) {
    h = *bandwidth;
  } else {
    if (support.rows() < 2) {
      return absl::InvalidArgumentError("KDE: Scott's rule needs two points");
    }
    const double n = support.rows();
    const Eigen::RowVectorXd mean = support.colwise().mean();
    const double pooled_var =
        (support.rowwise() - mean).squaredNorm() / ((n - 1) * support.cols());
    h = std::pow(n, -1.0 / (support.cols() + 4)) * std::sqrt(pooled_var);
  }
  if (!(h > 0.0) || !std::isfinite(h)) {
    return absl::InvalidArgumentError(absl::StrCat("KDE: degenerate bandwidth ", h));
  }
  KernelDensity kde;
  kde.support_ = std::move(support);
  kde.bandwidth_ = h;
  return kde;
}

double KernelDensity::LogPdf(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const double inv = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(support_.rows());
  for (Eigen::Index i = 0; i < support_.rows(); ++i) {
    terms[i] = -(support_.row(i) - x).squaredNorm() * inv;
    max_term = std::max(max_term, terms[i]);
  }
  // Summing sorted terms keeps the result independent of support order.
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  const double d = support_.cols();
  return max_term + std::log(sum) - std::log(static_cast<double>(support_.rows())) -
         d * std::log(bandwidth_ * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace dptldm
