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

// Black-box privacy attacks against a released synthetic table: singling
// out, linkability, attribute inference and membership inference.
//
// Attacks see tables only. A synthesizer enters solely as a SynthesizerFn
// used to train shadow models, so nothing here depends on model types.

#ifndef DPTLDM_ATTACKS_H_
#define DPTLDM_ATTACKS_H_

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "Eigen/Core"
#include "absl/status/statusor.h"
#include "dptldm/table.h"
#include "json.hpp"

namespace dptldm {

struct AttackReport {
  std::string attack;
  double tau_train = 0.0;
  double tau_control = 0.0;
  double risk = 0.0;  // [0, 100]
  size_t n_targets = 0;
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json ToJson() const;
};

// 100 max(0, (tau_train - tau_control) / (1 - tau_control)); 0 when
// tau_control = 1.
double RelativeRisk(double tau_train, double tau_control);

// Gower-style distance: |a - b| / range on continuous columns (each term
// capped at 1), 0/1 mismatch on categorical columns, averaged over the
// chosen columns. Ranges come from the reference table; a zero range
// counts any difference as 1.
class NeighborIndex {
 public:
  static absl::StatusOr<NeighborIndex> Create(const Dataset& reference,
                                              std::vector<size_t> columns);

  const std::vector<size_t>& columns() const { return columns_; }
  size_t size() const { return reference_.num_rows(); }

  double Distance(const Dataset& query, size_t row, size_t reference_row) const;
  // The k reference rows closest to query.row(row), by (distance, index).
  std::vector<size_t> KNearest(const Dataset& query, size_t row, size_t k) const;

 private:
  Dataset reference_;
  std::vector<size_t> columns_;
  std::vector<double> ranges_;
};

enum class SinglingOutMode { kUnivariate, kMultivariate };

// A conjunction of per-column conditions lo < x <= hi (continuous) or
// x == category (categorical).
struct Predicate {
  struct Condition {
    size_t column = 0;
    bool categorical = false;
    int category = 0;
    double lo = 0.0;
    double hi = 0.0;
  };
  std::vector<Condition> conditions;

  bool Matches(const Dataset& data, size_t row) const;
  size_t CountMatches(const Dataset& data) const;
};

// Univariate predicates isolate one synthetic value: a category seen once in
// the synthetic table, or a continuous value beyond the synthetic 1st/99th
// percentile, taken with the interval between its midpoints to the
// neighboring synthetic values. Multivariate predicates take three columns
// of a random synthetic record; continuous conditions point into the tail
// on the record's side of the synthetic median.
absl::StatusOr<std::vector<Predicate>> SinglingOutPredicates(
    const Dataset& synth, SinglingOutMode mode, size_t n_attacks, uint64_t seed);

// Success on a table: the predicate matches exactly one row.
absl::StatusOr<AttackReport> SinglingOut(const Dataset& synth,
                                         const Dataset& train,
                                         const Dataset& control,
                                         SinglingOutMode mode, size_t n_attacks,
                                         uint64_t seed);

// A target is linked when the k nearest synthetic rows of its `a` columns
// and of its `b` columns share a row.
absl::StatusOr<AttackReport> Linkability(const Dataset& synth,
                                         const Dataset& train_targets,
                                         const Dataset& control_targets,
                                         const std::vector<size_t>& a,
                                         const std::vector<size_t>& b, size_t k);

// Guesses `secret` from the nearest synthetic row on the `known` columns.
// Continuous guesses succeed within 5% of `secret_range`.
absl::StatusOr<AttackReport> AttributeInference(const Dataset& synth,
                                                const Dataset& train_targets,
                                                const Dataset& control_targets,
                                                const std::vector<size_t>& known,
                                                size_t secret, double secret_range);

inline constexpr double kAiaTolerance = 0.05;

enum class DistanceMetric { kHamming, kL2 };

struct MiaStrategyResult {
  std::string strategy;
  double tau = 0.5;
  bool flagged = false;  // degenerate input; tau fixed at 0.5
};

// Scores members and non-members, sets the threshold at the median score of
// a random calibration half, and returns the accuracy on the other half.
// Higher scores mean "member".
MiaStrategyResult ThresholdAttack(const std::string& strategy,
                                  const std::vector<double>& member_scores,
                                  const std::vector<double>& non_member_scores,
                                  uint64_t seed);

// Minimum distance to the synthetic table. Hamming compares categories and
// continuous values binned into 10 equal-width bins over the synthetic
// range; L2 works on the encoded row (continuous columns standardized by
// the synthetic mean and deviation, categorical columns one-hot).
absl::StatusOr<std::vector<double>> NearestSyntheticDistances(
    const Dataset& synth, const Dataset& targets, DistanceMetric metric);

absl::StatusOr<MiaStrategyResult> MiaDistance(const Dataset& synth,
                                              const Dataset& members,
                                              const Dataset& non_members,
                                              DistanceMetric metric,
                                              uint64_t seed);

// Log-likelihood under a Gaussian KDE fitted to the encoded synthetic rows.
absl::StatusOr<MiaStrategyResult> MiaKde(const Dataset& synth,
                                         const Dataset& members,
                                         const Dataset& non_members,
                                         uint64_t seed);

// Trains on a table and returns n synthetic rows.
using SynthesizerFn = std::function<absl::StatusOr<Dataset>(
    const Dataset& train, size_t n, uint64_t seed)>;

enum class ShadowFeatures { kNaive, kHist };

// Naive: mean, median and variance per continuous column, frequency per
// category. Hist: normalized 10-bin histograms over the reference range
// per continuous column, category frequencies per categorical column.
Eigen::VectorXd ShadowFeatureVector(const Dataset& synth, const Dataset& reference,
                                    ShadowFeatures kind);

struct ShadowOptions {
  int n_shadow = 8;
  size_t shadow_train_size = 200;
  size_t shadow_synth_size = 200;
  int max_retries = 3;
};

// Per target: n_shadow reference subsets X_i, shadow synthesizers trained on
// X_i (label 0) and X_i plus the target (label 1), one tree classifier per
// feature set, then a prediction on `attacked`. Returns one result per
// entry of `kinds`; shadows are shared between feature sets.
absl::StatusOr<std::vector<MiaStrategyResult>> MiaShadow(
    const Dataset& reference, const Dataset& members, const Dataset& non_members,
    const Dataset& attacked, const SynthesizerFn& trainer,
    const std::vector<ShadowFeatures>& kinds, const ShadowOptions& options,
    uint64_t seed);

// 100 max(0, (max tau - 1/2) / (1/2)).
AttackReport MiaRisk(const std::vector<MiaStrategyResult>& strategies);

struct PrivacySettings {
  size_t n_targets = 200;      // per side, singling out excluded
  size_t n_attacks = 200;      // singling-out predicates per mode
  size_t k_neighbors = 5;      // linkability
  size_t n_mia_targets = 500;  // per side, distance and KDE strategies
  size_t n_shadow_targets = 10;  // per side
  ShadowOptions shadow;
};

struct PrivacyReport {
  AttackReport singling_out;  // higher-risk mode; both modes in details
  AttackReport linkability;
  AttackReport aia;  // mean over secret columns; per column in details
  AttackReport mia;

  nlohmann::json ToJson() const;
};

// Runs every attack. Without a trainer the shadow strategies are skipped.
absl::StatusOr<PrivacyReport> EvaluatePrivacy(const Dataset& train,
                                              const Dataset& control,
                                              const Dataset& synth,
                                              const PrivacySettings& settings,
                                              const SynthesizerFn* trainer,
                                              uint64_t seed);

}  // namespace dptldm

#endif  // DPTLDM_ATTACKS_H_
