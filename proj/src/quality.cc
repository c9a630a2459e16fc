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

#include "dptldm/quality.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptldm/random.h"
#include "dptldm/status_macros.h"

namespace dptldm {
namespace {

constexpr double kTrainFraction = 0.7;
constexpr size_t kMinRowsPerSide = 10;

absl::Status CheckPair(const Dataset& real, const Dataset& synth) {
  if (!(real.schema() == synth.schema())) {
    return absl::InvalidArgumentError("real and synthetic schemas differ");
  }
  if (real.num_rows() == 0 || synth.num_rows() == 0) {
    return absl::InvalidArgumentError("real and synthetic data must be nonempty");
  }
  if (real.HasMissing() || synth.HasMissing()) {
    return absl::InvalidArgumentError("metrics need missing-free data");
  }
  return absl::OkStatus();
}

std::vector<int> Labels(const std::vector<double>& column) {
  std::vector<int> out(column.size());
  for (size_t i = 0; i < column.size(); ++i) out[i] = static_cast<int>(column[i]);
  return out;
}

double Variance(const std::vector<double>& x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / x.size();
}

bool AllEqual(const std::vector<double>& x) {
  return std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end();
}

// Pearson with the constant-input convention: two identical constants are
// fully similar, anything else involving a constant is not.
double AlignedPearson(const std::vector<double>& a, const std::vector<double>& b) {
  const bool ca = AllEqual(a);
  const bool cb = AllEqual(b);
  if (ca || cb) return (ca && cb && a.front() == b.front()) ? 1.0 : 0.0;
  return Pearson(a, b);
}

std::vector<double> AverageRanks(const std::vector<double>& x) {
  std::vector<size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * (i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double Association(const Dataset& data, size_t i, size_t j) {
  const bool ci = data.schema().column(i).is_categorical();
  const bool cj = data.schema().column(j).is_categorical();
  if (!ci && !cj) {
    if (AllEqual(data.column(i)) || AllEqual(data.column(j))) return 0.0;
    return Pearson(data.column(i), data.column(j));
  }
  if (ci && cj) {
    const std::vector<int> a = Labels(data.column(i));
    const std::vector<int> b = Labels(data.column(j));
    return 0.5 * (TheilsU(a, b).value_or(0.0) + TheilsU(b, a).value_or(0.0));
  }
  return ci ? CorrelationRatio(Labels(data.column(i)), data.column(j))
            : CorrelationRatio(Labels(data.column(j)), data.column(i));
}

std::vector<double> DescriptiveStats(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  return {x.front(), x.back(), Median(x), mean, std::sqrt(Variance(x))};
}

std::vector<double> Histogram(const std::vector<double>& values, double lo,
                              double hi) {
  std::vector<double> counts(kJsBins, 0.0);
  const double width = (hi - lo) / kJsBins;
  for (double v : values) {
    int bin = width > 0.0 ? static_cast<int>(std::floor((v - lo) / width)) : 0;
    counts[std::clamp(bin, 0, kJsBins - 1)] += 1.0;
  }
  return counts;
}

std::vector<double> CategoryCounts(const std::vector<double>& values, size_t k) {
  std::vector<double> counts(k, 0.0);
  for (double v : values) counts[static_cast<size_t>(v)] += 1.0;
  return counts;
}

size_t NumFeatures(const TableSchema& schema, std::optional<size_t> exclude) {
  size_t width = 0;
  for (size_t c = 0; c < schema.size(); ++c) {
    if (exclude == c) continue;
    width += schema.column(c).is_categorical() ? schema.column(c).categories.size() : 1;
  }
  return width;
}

absl::StatusOr<double> ColumnScore(const Dataset& source, const Dataset& holdout,
                                   size_t target, uint64_t seed,
                                   const UtilityOptions& options) {
  const bool classify = source.schema().column(target).is_categorical();
  const Task task = classify ? Task::kClassification : Task::kRegression;
  const Eigen::MatrixXd x = FeatureMatrix(source, target);
  const Eigen::MatrixXd x_holdout = FeatureMatrix(holdout, target);
  const std::vector<double>& y_col = source.column(target);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(y_col.data(), y_col.size());
  const std::vector<double>& h_col = holdout.column(target);
  const Eigen::VectorXd y_holdout =
      Eigen::Map<const Eigen::VectorXd>(h_col.data(), h_col.size());

  if (classify && AllEqual(y_col)) {
    // A single observed class: the only sensible prediction is that class.
    const std::vector<int> predicted(holdout.num_rows(), static_cast<int>(y_col[0]));
    return MacroF1(Labels(h_col), predicted);
  }
  size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  if (options.grid.size() > 1) {
    for (size_t g = 0; g < options.grid.size(); ++g) {
      ASSIGN_OR_RETURN(std::vector<FoldScore> folds,
                       KFoldCv(x, y, options.folds, task, options.grid[g], seed));
      double sum = 0.0;
      int used = 0;
      for (const FoldScore& f : folds) {
        if (f.skipped) continue;
        sum += f.score;
        ++used;
      }
      const double mean = used > 0 ? sum / used : -1.0;
      if (mean > best_score) {
        best_score = mean;
        best = g;
      }
    }
  }
  const BoostingParams& params = options.grid[best];
  if (classify) {
    ASSIGN_OR_RETURN(LabelClassifier model,
                     LabelClassifier::Fit(x, Labels(y_col), params));
    ASSIGN_OR_RETURN(std::vector<int> predicted, model.PredictLabels(x_holdout));
    return MacroF1(Labels(h_col), predicted);
  }
  ASSIGN_OR_RETURN(TreeEnsemble model, FitRegressor(x, y, params));
  ASSIGN_OR_RETURN(Eigen::VectorXd predicted, Predict(model, x_holdout));
  return D2AbsoluteError(y_holdout, predicted);
}

}  // namespace

nlohmann::json QualityReport::ToJson() const {
  return {{"resemblance",
           {{"column", resemblance.column},
            {"correlation", resemblance.correlation},
            {"statistical", resemblance.statistical},
            {"jensen_shannon", resemblance.jensen_shannon},
            {"kolmogorov_smirnov", resemblance.kolmogorov_smirnov},
            {"aggregate", resemblance.aggregate}}},
          {"discriminability", discriminability},
          {"utility", utility},
          {"metadata",
           {{"column_similarity_pairing", "sorted quantile alignment"},
            {"js_bins", kJsBins},
            {"discriminability_split", "70/30"},
            {"utility_percentile", "90 (nearest rank)"}}}};
}

double Pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double Spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return Pearson(AverageRanks(x), AverageRanks(y));
}

double Entropy(const std::vector<int>& x) {
  std::map<int, double> counts;
  for (int v : x) counts[v] += 1.0;
  double h = 0.0;
  for (const auto& [label, count] : counts) {
    const double p = count / x.size();
    h -= p * std::log(p);
  }
  return h;
}

std::optional<double> TheilsU(const std::vector<int>& x, const std::vector<int>& y) {
  const double hx = Entropy(x);
  if (hx <= 0.0) return std::nullopt;
  std::map<int, std::vector<int>> by_y;
  for (size_t i = 0; i < x.size(); ++i) by_y[y[i]].push_back(x[i]);
  double conditional = 0.0;
  for (const auto& [label, members] : by_y) {
    conditional += static_cast<double>(members.size()) / x.size() * Entropy(members);
  }
  return std::clamp((hx - conditional) / hx, 0.0, 1.0);
}

double CorrelationRatio(const std::vector<int>& groups,
                        const std::vector<double>& values) {
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  std::map<int, std::pair<double, double>> sums;  // group -> (sum, count)
  double total = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    sums[groups[i]].first += values[i];
    sums[groups[i]].second += 1.0;
    total += (values[i] - mean) * (values[i] - mean);
  }
  if (total == 0.0) return 0.0;
  double between = 0.0;
  for (const auto& [g, s] : sums) {
    const double gm = s.first / s.second;
    between += s.second * (gm - mean) * (gm - mean);
  }
  return std::sqrt(std::clamp(between / total, 0.0, 1.0));
}

double JensenShannonDistance(const std::vector<double>& p_raw,
                             const std::vector<double>& q_raw) {
  const double sp = std::accumulate(p_raw.begin(), p_raw.end(), 0.0);
  const double sq = std::accumulate(q_raw.begin(), q_raw.end(), 0.0);
  double divergence = 0.0;
  for (size_t i = 0; i < p_raw.size(); ++i) {
    const double p = p_raw[i] / sp;
    const double q = q_raw[i] / sq;
    const double m = 0.5 * (p + q);
    if (p > 0.0) divergence += 0.5 * p * std::log2(p / m);
    if (q > 0.0) divergence += 0.5 * q * std::log2(q / m);
  }
  return std::sqrt(std::clamp(divergence, 0.0, 1.0));
}

double KsStatistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0;
  size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  return d;
}

double NearestRankPercentile(std::vector<double> values, double pct) {
  std::sort(values.begin(), values.end());
  const size_t rank = static_cast<size_t>(std::ceil(pct / 100.0 * values.size()));
  return values[std::clamp<size_t>(rank, 1, values.size()) - 1];
}

std::vector<double> QuantileResample(std::vector<double> values, size_t m) {
  std::sort(values.begin(), values.end());
  std::vector<double> out(m);
  for (size_t i = 0; i < m; ++i) {
    const size_t idx = static_cast<size_t>((i + 0.5) * values.size() / m);
    out[i] = values[std::min(idx, values.size() - 1)];
  }
  return out;
}

absl::StatusOr<double> ColumnSimilarity(const Dataset& real, const Dataset& synth) {
  RETURN_IF_ERROR(CheckPair(real, synth));
  const size_t m = std::min(real.num_rows(), synth.num_rows());
  double total = 0.0;
  for (size_t c = 0; c < real.num_columns(); ++c) {
    const std::vector<double> a = QuantileResample(real.column(c), m);
    const std::vector<double> b = QuantileResample(synth.column(c), m);
    double score;
    if (real.schema().column(c).is_categorical()) {
      const std::optional<double> u = TheilsU(Labels(a), Labels(b));
      score = u.has_value() ? *u
                            : (AllEqual(b) && a.front() == b.front() ? 1.0 : 0.0);
    } else {
      score = AlignedPearson(a, b);
    }
    total += std::clamp(score, 0.0, 1.0);
  }
  return total / real.num_columns();
}

absl::StatusOr<double> CorrelationSimilarity(const Dataset& real,
                                             const Dataset& synth) {
  RETURN_IF_ERROR(CheckPair(real, synth));
  const size_t k = real.num_columns();
  if (k < 2) return 1.0;
  std::vector<double> a;
  std::vector<double> b;
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = i + 1; j < k; ++j) {
      a.push_back(Association(real, i, j));
      b.push_back(Association(synth, i, j));
    }
  }
  if (a.size() < 2 || AllEqual(a) || AllEqual(b)) {
    double diff = 0.0;
    for (size_t i = 0; i < a.size(); ++i) diff += std::abs(a[i] - b[i]);
    return std::clamp(1.0 - diff / a.size() / 2.0, 0.0, 1.0);
  }
  return std::clamp(Pearson(a, b), 0.0, 1.0);
}

absl::StatusOr<double> StatisticalSimilarity(const Dataset& real,
                                             const Dataset& synth) {
  RETURN_IF_ERROR(CheckPair(real, synth));
  std::vector<double> a;
  std::vector<double> b;
  for (size_t c = 0; c < real.num_columns(); ++c) {
    if (real.schema().column(c).is_categorical()) continue;
    for (double v : DescriptiveStats(real.column(c))) a.push_back(v);
    for (double v : DescriptiveStats(synth.column(c))) b.push_back(v);
  }
  if (a.empty()) return 1.0;
  const double rho = Spearman(a, b);
  if (std::isnan(rho)) return a == b ? 1.0 : 0.0;
  return std::clamp(rho, 0.0, 1.0);
}

absl::StatusOr<double> JsSimilarity(const Dataset& real, const Dataset& synth) {
  RETURN_IF_ERROR(CheckPair(real, synth));
  double total = 0.0;
  for (size_t c = 0; c < real.num_columns(); ++c) {
    const ColumnSpec& spec = real.schema().column(c);
    std::vector<double> p;
    std::vector<double> q;
    if (spec.is_categorical()) {
      p = CategoryCounts(real.column(c), spec.categories.size());
      q = CategoryCounts(synth.column(c), spec.categories.size());
    } else {
      const auto [rlo, rhi] =
          std::minmax_element(real.column(c).begin(), real.column(c).end());
      const auto [slo, shi] =
          std::minmax_element(synth.column(c).begin(), synth.column(c).end());
      const double lo = std::min(*rlo, *slo);
      const double hi = std::max(*rhi, *shi);
      p = Histogram(real.column(c), lo, hi);
      q = Histogram(synth.column(c), lo, hi);
    }
    total += 1.0 - JensenShannonDistance(p, q);
  }
  return total / real.num_columns();
}

absl::StatusOr<double> KsSimilarity(const Dataset& real, const Dataset& synth) {
  RETURN_IF_ERROR(CheckPair(real, synth));
  double total = 0.0;
  int used = 0;
  for (size_t c = 0; c < real.num_columns(); ++c) {
    if (real.schema().column(c).is_categorical()) continue;
    total += 1.0 - KsStatistic(real.column(c), synth.column(c));
    ++used;
  }
  return used == 0 ? 1.0 : total / used;
}

absl::StatusOr<ResemblanceScores> Resemblance(const Dataset& real,
                                              const Dataset& synth) {
  ResemblanceScores s;
  ASSIGN_OR_RETURN(s.column, ColumnSimilarity(real, synth));
  ASSIGN_OR_RETURN(s.correlation, CorrelationSimilarity(real, synth));
  ASSIGN_OR_RETURN(s.statistical, StatisticalSimilarity(real, synth));
  ASSIGN_OR_RETURN(s.jensen_shannon, JsSimilarity(real, synth));
  ASSIGN_OR_RETURN(s.kolmogorov_smirnov, KsSimilarity(real, synth));
  s.aggregate = 100.0 *
                (s.column + s.correlation + s.statistical + s.jensen_shannon +
                 s.kolmogorov_smirnov) /
                5.0;
  return s;
}

double DiscriminabilityFromProbabilities(const Eigen::VectorXd& probabilities) {
  const double mae = (probabilities.array() - 0.5).abs().mean();
  return std::clamp(100.0 * (1.0 - 2.0 * mae), 0.0, 100.0);
}

absl::StatusOr<double> Discriminability(const Dataset& real, const Dataset& synth,
                                        uint64_t seed) {
  RETURN_IF_ERROR(CheckPair(real, synth));
  if (real.num_rows() < kMinRowsPerSide || synth.num_rows() < kMinRowsPerSide) {
    return absl::InvalidArgumentError(absl::StrCat(
        "discriminability needs at least ", kMinRowsPerSide, " rows per side"));
  }
  Rng rng(seed);
  const size_t per_side = std::min(real.num_rows(), synth.num_rows());
  auto subsample = [&](const Dataset& d) {
    std::vector<size_t> rows = rng.Permutation(d.num_rows());
    rows.resize(per_side);
    std::sort(rows.begin(), rows.end());
    return d.SelectRows(rows);
  };
  const Eigen::MatrixXd xr = FeatureMatrix(subsample(real));
  const Eigen::MatrixXd xs = FeatureMatrix(subsample(synth));
  const size_t n = 2 * per_side;
  const std::vector<size_t> order = rng.Permutation(n);
  const size_t n_train = static_cast<size_t>(std::floor(kTrainFraction * n));
  Eigen::MatrixXd x_train(n_train, xr.cols());
  Eigen::MatrixXd x_test(n - n_train, xr.cols());
  std::vector<int> y_train(n_train);
  for (size_t i = 0; i < n; ++i) {
    const size_t src = order[i];
    const bool synthetic = src >= per_side;
    const auto row = synthetic ? xs.row(src - per_side) : xr.row(src);
    if (i < n_train) {
      x_train.row(i) = row;
      y_train[i] = synthetic ? 1 : 0;
    } else {
      x_test.row(i - n_train) = row;
    }
  }
  ASSIGN_OR_RETURN(TreeEnsemble model, FitClassifier(x_train, y_train));
  ASSIGN_OR_RETURN(Eigen::VectorXd p, PredictProba(model, x_test));
  return DiscriminabilityFromProbabilities(p);
}

std::vector<BoostingParams> UtilityOptions::DefaultUtilityGrid() {
  std::vector<BoostingParams> grid;
  for (int depth : {2, 3}) {
    for (int trees : {50, 100}) {
      BoostingParams p;
      p.max_depth = depth;
      p.num_trees = trees;
      grid.push_back(p);
    }
  }
  return grid;
}

absl::StatusOr<UtilityDetail> UtilityDetailed(const Dataset& real_train,
                                              const Dataset& synth,
                                              const Dataset& real_holdout,
                                              uint64_t seed,
                                              const UtilityOptions& options) {
  RETURN_IF_ERROR(CheckPair(real_train, synth));
  RETURN_IF_ERROR(CheckPair(real_train, real_holdout));
  if (real_train.num_columns() < 2) {
    return absl::InvalidArgumentError("utility needs at least two columns");
  }
  if (options.grid.empty()) return absl::InvalidArgumentError("utility: empty grid");
  const size_t min_rows = static_cast<size_t>(std::max(options.folds, 2));
  if (real_train.num_rows() < min_rows || synth.num_rows() < min_rows) {
    return absl::InvalidArgumentError("utility: too few rows for cross-validation");
  }
  UtilityDetail detail;
  for (size_t c = 0; c < real_train.num_columns(); ++c) {
    const uint64_t column_seed = SplitMix64(seed + c);
    ASSIGN_OR_RETURN(double r, ColumnScore(real_train, real_holdout, c,
                                           column_seed, options));
    ASSIGN_OR_RETURN(double s, ColumnScore(synth, real_holdout, c,
                                           column_seed, options));
    detail.real_scores.push_back(r);
    detail.synth_scores.push_back(s);
  }
  detail.real_performance =
      NearestRankPercentile(detail.real_scores, options.percentile);
  detail.synth_performance =
      NearestRankPercentile(detail.synth_scores, options.percentile);
  if (detail.real_performance <= 0.0) {
    detail.utility = detail.synth_performance <= 0.0 ? 100.0 : 0.0;
  } else {
    detail.utility = 100.0 * std::clamp(detail.synth_performance /
                                            detail.real_performance,
                                        0.0, 1.0);
  }
  return detail;
}

absl::StatusOr<double> Utility(const Dataset& real_train, const Dataset& synth,
                               const Dataset& real_holdout, uint64_t seed,
                               const UtilityOptions& options) {
  ASSIGN_OR_RETURN(UtilityDetail detail,
                   UtilityDetailed(real_train, synth, real_holdout, seed, options));
  return detail.utility;
}

absl::StatusOr<QualityReport> EvaluateQuality(const Dataset& real_train,
                                              const Dataset& synth,
                                              const Dataset& real_holdout,
                                              uint64_t seed) {
  const Rng root(seed);
  QualityReport report;
  ASSIGN_OR_RETURN(report.resemblance, Resemblance(real_train, synth));
  ASSIGN_OR_RETURN(report.discriminability,
                   Discriminability(real_train, synth,
                                    root.Fork("discriminability").seed()));
  ASSIGN_OR_RETURN(report.utility, Utility(real_train, synth, real_holdout,
                                           root.Fork("utility").seed()));
  return report;
}

Eigen::MatrixXd FeatureMatrix(const Dataset& data, std::optional<size_t> exclude) {
  const TableSchema& schema = data.schema();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(data.num_rows(), NumFeatures(schema, exclude));
  Eigen::Index offset = 0;
  for (size_t c = 0; c < schema.size(); ++c) {
    if (exclude == c) continue;
    const ColumnSpec& spec = schema.column(c);
    if (spec.is_categorical()) {
      for (size_t r = 0; r < data.num_rows(); ++r) {
        x(r, offset + data.category(r, c)) = 1.0;
      }
      offset += spec.categories.size();
    } else {
      for (size_t r = 0; r < data.num_rows(); ++r) x(r, offset) = data.value(r, c);
      ++offset;
    }
  }
  return x;
}

}  // namespace dptldm
