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

// Quality scores for synthetic tables: resemblance (five similarity
// sub-scores), discriminability and downstream utility. Sub-scores live in
// [0, 1]; reported scores are scaled to [0, 100].

#ifndef DPTLDM_QUALITY_H_
#define DPTLDM_QUALITY_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "Eigen/Core"
#include "absl/status/statusor.h"
#include "dptldm/downstream.h"
#include "dptldm/table.h"
#include "json.hpp"

namespace dptldm {

inline constexpr int kJsBins = 20;

struct ResemblanceScores {
  double column = 0.0;
  double correlation = 0.0;
  double statistical = 0.0;
  double jensen_shannon = 0.0;
  double kolmogorov_smirnov = 0.0;
  double aggregate = 0.0;  // 100 x mean of the five
};

struct QualityReport {
  ResemblanceScores resemblance;
  double discriminability = 0.0;
  double utility = 0.0;

  nlohmann::json ToJson() const;
};

// Statistics shared by the metrics.
double Pearson(const std::vector<double>& x, const std::vector<double>& y);
// Pearson correlation of average ranks.
double Spearman(const std::vector<double>& x, const std::vector<double>& y);
// Shannon entropy in nats of integer labels.
double Entropy(const std::vector<int>& x);
// U(x | y) = (H(x) - H(x | y)) / H(x); nullopt when H(x) = 0.
std::optional<double> TheilsU(const std::vector<int>& x, const std::vector<int>& y);
// sqrt(between-group / total sum of squares) of `values` grouped by `groups`;
// 0 when the total is 0.
double CorrelationRatio(const std::vector<int>& groups,
                        const std::vector<double>& values);
// Jensen-Shannon distance, log base 2, of two unnormalized histograms.
double JensenShannonDistance(const std::vector<double>& p,
                             const std::vector<double>& q);
// Two-sample Kolmogorov-Smirnov statistic.
double KsStatistic(std::vector<double> a, std::vector<double> b);
// Nearest-rank percentile, pct in (0, 100].
double NearestRankPercentile(std::vector<double> values, double pct);
// Sorts `values` and picks m of them at quantiles (i + 0.5) / m.
std::vector<double> QuantileResample(std::vector<double> values, size_t m);

absl::StatusOr<double> ColumnSimilarity(const Dataset& real, const Dataset& synth);
absl::StatusOr<double> CorrelationSimilarity(const Dataset& real,
                                             const Dataset& synth);
absl::StatusOr<double> StatisticalSimilarity(const Dataset& real,
                                             const Dataset& synth);
absl::StatusOr<double> JsSimilarity(const Dataset& real, const Dataset& synth);
absl::StatusOr<double> KsSimilarity(const Dataset& real, const Dataset& synth);
absl::StatusOr<ResemblanceScores> Resemblance(const Dataset& real,
                                              const Dataset& synth);

// 100 (1 - 2 mean |p - 1/2|).
double DiscriminabilityFromProbabilities(const Eigen::VectorXd& probabilities);
// Balanced real-vs-synthetic classification on a 70/30 split.
absl::StatusOr<double> Discriminability(const Dataset& real, const Dataset& synth,
                                        uint64_t seed);

struct UtilityOptions {
  int folds = 3;
  double percentile = 90.0;
  // Candidates compared by cross-validation on the training source.
  std::vector<BoostingParams> grid = DefaultUtilityGrid();

  static std::vector<BoostingParams> DefaultUtilityGrid();
};

struct UtilityDetail {
  std::vector<double> real_scores;   // per target column
  std::vector<double> synth_scores;  // per target column
  double real_performance = 0.0;
  double synth_performance = 0.0;
  double utility = 0.0;
};

absl::StatusOr<UtilityDetail> UtilityDetailed(const Dataset& real_train,
                                              const Dataset& synth,
                                              const Dataset& real_holdout,
                                              uint64_t seed,
                                              const UtilityOptions& options = {});
absl::StatusOr<double> Utility(const Dataset& real_train, const Dataset& synth,
                               const Dataset& real_holdout, uint64_t seed,
                               const UtilityOptions& options = {});

absl::StatusOr<QualityReport> EvaluateQuality(const Dataset& real_train,
                                              const Dataset& synth,
                                              const Dataset& real_holdout,
                                              uint64_t seed);

// Continuous columns as-is, categorical columns one-hot, in schema order,
// skipping column `exclude` if given.
Eigen::MatrixXd FeatureMatrix(const Dataset& data,
                              std::optional<size_t> exclude = std::nullopt);

}  // namespace dptldm

#endif  // DPTLDM_QUALITY_H_
