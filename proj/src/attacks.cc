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

#include "dptldm/attacks.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptldm/downstream.h"
#include "dptldm/quality.h"
#include "dptldm/random.h"
#include "dptldm/status_macros.h"

namespace dptldm {
namespace {

constexpr int kDistanceBins = 10;
constexpr int kShadowHistBins = 10;
constexpr size_t kPredicateArity = 3;
constexpr double kInf = std::numeric_limits<double>::infinity();

absl::Status SameSchema(const Dataset& a, const Dataset& b) {
  if (!(a.schema() == b.schema())) {
    return absl::InvalidArgumentError("attack inputs have different schemas");
  }
  return absl::OkStatus();
}

absl::Status CheckColumns(const TableSchema& schema,
                          const std::vector<size_t>& columns) {
  for (size_t c : columns) {
    if (c >= schema.size()) {
      return absl::InvalidArgumentError(absl::StrCat("column ", c, " out of range"));
    }
  }
  return absl::OkStatus();
}

// `count` distinct rows of `data` chosen uniformly, in increasing order.
std::vector<size_t> SampleRows(size_t n, size_t count, Rng& rng) {
  std::vector<size_t> rows = rng.Permutation(n);
  rows.resize(std::min(count, n));
  std::sort(rows.begin(), rows.end());
  return rows;
}

double Quantile(std::vector<double> sorted_values, double q) {
  const size_t rank = static_cast<size_t>(std::ceil(q * sorted_values.size()));
  return sorted_values[std::clamp<size_t>(rank, 1, sorted_values.size()) - 1];
}

// Continuous columns standardized by the synthetic mean and population
// deviation, categorical columns one-hot.
class SyntheticEncoder {
 public:
  explicit SyntheticEncoder(const Dataset& synth) : schema_(synth.schema()) {
    for (size_t c = 0; c < schema_.size(); ++c) {
      double mean = 0.0;
      double sd = 1.0;
      if (!schema_.column(c).is_categorical()) {
        const std::vector<double>& v = synth.column(c);
        mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / v.size());
        if (!(sd > 0.0)) sd = 1.0;
      }
      means_.push_back(mean);
      sds_.push_back(sd);
    }
  }

  Eigen::MatrixXd Encode(const Dataset& data) const {
    Eigen::MatrixXd x = FeatureMatrix(data);
    Eigen::Index offset = 0;
    for (size_t c = 0; c < schema_.size(); ++c) {
      if (schema_.column(c).is_categorical()) {
        offset += schema_.column(c).categories.size();
        continue;
      }
      x.col(offset) = (x.col(offset).array() - means_[c]) / sds_[c];
      ++offset;
    }
    return x;
  }

 private:
  TableSchema schema_;
  std::vector<double> means_;
  std::vector<double> sds_;
};

std::vector<double> Negated(std::vector<double> v) {
  for (double& x : v) x = -x;
  return v;
}

}  // namespace

nlohmann::json AttackReport::ToJson() const {
  return {{"attack", attack},
          {"tau_train", tau_train},
          {"tau_control", tau_control},
          {"risk", risk},
          {"n_targets", n_targets},
          {"details", details}};
}

double RelativeRisk(double tau_train, double tau_control) {
  if (tau_control >= 1.0) return 0.0;
  return 100.0 * std::clamp((tau_train - tau_control) / (1.0 - tau_control), 0.0, 1.0);
}

absl::StatusOr<NeighborIndex> NeighborIndex::Create(const Dataset& reference,
                                                    std::vector<size_t> columns) {
  if (reference.num_rows() == 0) {
    return absl::InvalidArgumentError("neighbor index: empty reference");
  }
  if (columns.empty()) return absl::InvalidArgumentError("neighbor index: no columns");
  RETURN_IF_ERROR(CheckColumns(reference.schema(), columns));
  NeighborIndex index;
  index.reference_ = reference;
  for (size_t c : columns) {
    double range = 0.0;
    if (!reference.schema().column(c).is_categorical()) {
      const auto [lo, hi] = std::minmax_element(reference.column(c).begin(),
                                                reference.column(c).end());
      range = *hi - *lo;
    }
    index.ranges_.push_back(range);
  }
  index.columns_ = std::move(columns);
  return index;
}

double NeighborIndex::Distance(const Dataset& query, size_t row,
                               size_t reference_row) const {
  double total = 0.0;
  for (size_t i = 0; i < columns_.size(); ++i) {
    const size_t c = columns_[i];
    const double a = query.value(row, c);
    const double b = reference_.value(reference_row, c);
    if (reference_.schema().column(c).is_categorical() || ranges_[i] == 0.0) {
      total += a == b ? 0.0 : 1.0;
    } else {
      total += std::min(1.0, std::abs(a - b) / ranges_[i]);
    }
  }
  return total / columns_.size();
}

std::vector<size_t> NeighborIndex::KNearest(const Dataset& query, size_t row,
                                            size_t k) const {
  std::vector<std::pair<double, size_t>> scored(reference_.num_rows());
  for (size_t j = 0; j < scored.size(); ++j) scored[j] = {Distance(query, row, j), j};
  k = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end());
  std::vector<size_t> out(k);
  for (size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

bool Predicate::Matches(const Dataset& data, size_t row) const {
  for (const Condition& c : conditions) {
    const double v = data.value(row, c.column);
    if (c.categorical) {
      if (static_cast<int>(v) != c.category) return false;
    } else if (!(v > c.lo && v <= c.hi)) {
      return false;
    }
  }
  return true;
}

size_t Predicate::CountMatches(const Dataset& data) const {
  size_t count = 0;
  for (size_t r = 0; r < data.num_rows(); ++r) count += Matches(data, r);
  return count;
}

absl::StatusOr<std::vector<Predicate>> SinglingOutPredicates(
    const Dataset& synth, SinglingOutMode mode, size_t n_attacks, uint64_t seed) {
  if (n_attacks == 0) return absl::InvalidArgumentError("singling out: n_attacks = 0");
  if (synth.num_rows() == 0) return absl::InvalidArgumentError("singling out: empty synth");
  const TableSchema& schema = synth.schema();
  Rng rng(seed);
  std::vector<Predicate> predicates;
  if (mode == SinglingOutMode::kUnivariate) {
    for (size_t c = 0; c < schema.size(); ++c) {
      const std::vector<double>& col = synth.column(c);
      if (schema.column(c).is_categorical()) {
        std::map<int, size_t> counts;
        for (double v : col) ++counts[static_cast<int>(v)];
        for (const auto& [category, count] : counts) {
          if (count != 1) continue;
          Predicate p;
          p.conditions.push_back({c, true, category, 0.0, 0.0});
          predicates.push_back(p);
        }
        continue;
      }
      std::vector<double> sorted = col;
      std::sort(sorted.begin(), sorted.end());
      const double p01 = Quantile(sorted, 0.01);
      const double p99 = Quantile(sorted, 0.99);
      for (size_t i = 0; i < sorted.size(); ++i) {
        const double v = sorted[i];
        const bool unique = (i == 0 || sorted[i - 1] != v) &&
                            (i + 1 == sorted.size() || sorted[i + 1] != v);
        if (!unique || (v > p01 && v < p99)) continue;
        const double lo = i == 0 ? -kInf : 0.5 * (sorted[i - 1] + v);
        const double hi = i + 1 == sorted.size() ? kInf : 0.5 * (v + sorted[i + 1]);
        if (!(lo < v && v <= hi)) continue;
        Predicate p;
        p.conditions.push_back({c, false, 0, lo, hi});
        predicates.push_back(p);
      }
    }
    const std::vector<size_t> order = rng.Permutation(predicates.size());
    std::vector<Predicate> chosen;
    for (size_t i = 0; i < order.size() && chosen.size() < n_attacks; ++i) {
      chosen.push_back(predicates[order[i]]);
    }
    return chosen;
  }
  std::vector<double> medians(schema.size(), 0.0);
  for (size_t c = 0; c < schema.size(); ++c) {
    if (!schema.column(c).is_categorical()) medians[c] = Median(synth.column(c));
  }
  const size_t arity = std::min(kPredicateArity, schema.size());
  for (size_t a = 0; a < n_attacks; ++a) {
    const size_t record = rng.UniformInt(synth.num_rows());
    std::vector<size_t> columns = rng.Permutation(schema.size());
    columns.resize(arity);
    std::sort(columns.begin(), columns.end());
    Predicate p;
    for (size_t c : columns) {
      const double v = synth.value(record, c);
      if (schema.column(c).is_categorical()) {
        p.conditions.push_back({c, true, static_cast<int>(v), 0.0, 0.0});
      } else if (v >= medians[c]) {
        p.conditions.push_back({c, false, 0, std::nextafter(v, -kInf), kInf});
      } else {
        p.conditions.push_back({c, false, 0, -kInf, v});
      }
    }
    predicates.push_back(std::move(p));
  }
  return predicates;
}

absl::StatusOr<AttackReport> SinglingOut(const Dataset& synth,
                                         const Dataset& train,
                                         const Dataset& control,
                                         SinglingOutMode mode, size_t n_attacks,
                                         uint64_t seed) {
  RETURN_IF_ERROR(SameSchema(synth, train));
  RETURN_IF_ERROR(SameSchema(synth, control));
  ASSIGN_OR_RETURN(std::vector<Predicate> predicates,
                   SinglingOutPredicates(synth, mode, n_attacks, seed));
  AttackReport report;
  report.attack = mode == SinglingOutMode::kUnivariate ? "singling_out_univariate"
                                                       : "singling_out_multivariate";
  report.n_targets = predicates.size();
  report.details["requested_attacks"] = n_attacks;
  if (predicates.size() < n_attacks) {
    report.details["warning"] = absl::StrCat(
        "only ", predicates.size(), " predicates available; attack count reduced");
  }
  if (predicates.empty()) return report;
  size_t train_hits = 0;
  size_t control_hits = 0;
  for (const Predicate& p : predicates) {
    train_hits += p.CountMatches(train) == 1;
    control_hits += p.CountMatches(control) == 1;
  }
  report.tau_train = static_cast<double>(train_hits) / predicates.size();
  report.tau_control = static_cast<double>(control_hits) / predicates.size();
  report.risk = RelativeRisk(report.tau_train, report.tau_control);
  return report;
}

absl::StatusOr<AttackReport> Linkability(const Dataset& synth,
                                         const Dataset& train_targets,
                                         const Dataset& control_targets,
                                         const std::vector<size_t>& a,
                                         const std::vector<size_t>& b, size_t k) {
  RETURN_IF_ERROR(SameSchema(synth, train_targets));
  RETURN_IF_ERROR(SameSchema(synth, control_targets));
  if (a.empty() || b.empty()) {
    return absl::InvalidArgumentError("linkability: attribute sets must be nonempty");
  }
  for (size_t c : a) {
    if (std::find(b.begin(), b.end(), c) != b.end()) {
      return absl::InvalidArgumentError("linkability: attribute sets overlap");
    }
  }
  if (k < 1 || k > synth.num_rows()) {
    return absl::InvalidArgumentError("linkability: need 1 <= k <= |synth|");
  }
  ASSIGN_OR_RETURN(NeighborIndex index_a, NeighborIndex::Create(synth, a));
  ASSIGN_OR_RETURN(NeighborIndex index_b, NeighborIndex::Create(synth, b));
  auto rate = [&](const Dataset& targets) {
    if (targets.num_rows() == 0) return 0.0;
    size_t linked = 0;
    for (size_t r = 0; r < targets.num_rows(); ++r) {
      std::vector<size_t> na = index_a.KNearest(targets, r, k);
      std::vector<size_t> nb = index_b.KNearest(targets, r, k);
      std::sort(na.begin(), na.end());
      std::sort(nb.begin(), nb.end());
      std::vector<size_t> common;
      std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(),
                            std::back_inserter(common));
      linked += !common.empty();
    }
    return static_cast<double>(linked) / targets.num_rows();
  };
  AttackReport report;
  report.attack = "linkability";
  report.tau_train = rate(train_targets);
  report.tau_control = rate(control_targets);
  report.risk = RelativeRisk(report.tau_train, report.tau_control);
  report.n_targets = train_targets.num_rows();
  report.details = {{"k", k}, {"a", a}, {"b", b}};
  return report;
}

absl::StatusOr<AttackReport> AttributeInference(const Dataset& synth,
                                                const Dataset& train_targets,
                                                const Dataset& control_targets,
                                                const std::vector<size_t>& known,
                                                size_t secret, double secret_range) {
  RETURN_IF_ERROR(SameSchema(synth, train_targets));
  RETURN_IF_ERROR(SameSchema(synth, control_targets));
  RETURN_IF_ERROR(CheckColumns(synth.schema(), {secret}));
  if (known.empty()) return absl::InvalidArgumentError("aia: no known attributes");
  if (std::find(known.begin(), known.end(), secret) != known.end()) {
    return absl::InvalidArgumentError("aia: secret is among the known attributes");
  }
  const bool categorical = synth.schema().column(secret).is_categorical();
  AttackReport report;
  report.attack = "aia";
  report.n_targets = train_targets.num_rows();
  report.details = {{"secret", synth.schema().column(secret).name}};
  if (!categorical && !(secret_range > 0.0)) {
    report.details["flag"] = "constant secret column";
    return report;
  }
  ASSIGN_OR_RETURN(NeighborIndex index, NeighborIndex::Create(synth, known));
  const double tolerance = kAiaTolerance * secret_range;
  auto rate = [&](const Dataset& targets) {
    if (targets.num_rows() == 0) return 0.0;
    size_t correct = 0;
    for (size_t r = 0; r < targets.num_rows(); ++r) {
      const size_t nearest = index.KNearest(targets, r, 1)[0];
      const double guess = synth.value(nearest, secret);
      const double truth = targets.value(r, secret);
      correct += categorical ? guess == truth : std::abs(guess - truth) <= tolerance;
    }
    return static_cast<double>(correct) / targets.num_rows();
  };
  report.tau_train = rate(train_targets);
  report.tau_control = rate(control_targets);
  report.risk = RelativeRisk(report.tau_train, report.tau_control);
  return report;
}

MiaStrategyResult ThresholdAttack(const std::string& strategy,
                                  const std::vector<double>& member_scores,
                                  const std::vector<double>& non_member_scores,
                                  uint64_t seed) {
  MiaStrategyResult result;
  result.strategy = strategy;
  std::vector<std::pair<double, int>> scored;
  for (double s : member_scores) scored.push_back({s, 1});
  for (double s : non_member_scores) scored.push_back({s, 0});
  const bool all_equal = std::all_of(scored.begin(), scored.end(), [&](const auto& p) {
    return p.first == scored.front().first;
  });
  if (scored.size() < 4 || all_equal) {
    result.flagged = true;
    return result;
  }
  Rng rng(seed);
  const std::vector<size_t> order = rng.Permutation(scored.size());
  const size_t half = scored.size() / 2;
  std::vector<double> calibration;
  for (size_t i = 0; i < half; ++i) calibration.push_back(scored[order[i]].first);
  const double threshold = Median(calibration);
  size_t correct = 0;
  for (size_t i = half; i < order.size(); ++i) {
    const auto& [score, label] = scored[order[i]];
    correct += (score >= threshold ? 1 : 0) == label;
  }
  result.tau = static_cast<double>(correct) / (order.size() - half);
  return result;
}

absl::StatusOr<std::vector<double>> NearestSyntheticDistances(
    const Dataset& synth, const Dataset& targets, DistanceMetric metric) {
  RETURN_IF_ERROR(SameSchema(synth, targets));
  if (synth.num_rows() == 0) return absl::InvalidArgumentError("mia: empty synth");
  std::vector<double> out(targets.num_rows(), kInf);
  if (metric == DistanceMetric::kL2) {
    const SyntheticEncoder encoder(synth);
    const Eigen::MatrixXd s = encoder.Encode(synth);
    const Eigen::MatrixXd t = encoder.Encode(targets);
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      out[i] = std::sqrt((s.rowwise() - t.row(i)).rowwise().squaredNorm().minCoeff());
    }
    return out;
  }
  const TableSchema& schema = synth.schema();
  // Discretize every column to integer codes.
  auto codes = [&](const Dataset& d) {
    Eigen::MatrixXi m(d.num_rows(), schema.size());
    for (size_t c = 0; c < schema.size(); ++c) {
      if (schema.column(c).is_categorical()) {
        for (size_t r = 0; r < d.num_rows(); ++r) m(r, c) = d.category(r, c);
        continue;
      }
      const auto [lo, hi] =
          std::minmax_element(synth.column(c).begin(), synth.column(c).end());
      const double width = (*hi - *lo) / kDistanceBins;
      for (size_t r = 0; r < d.num_rows(); ++r) {
        const int bin = width > 0.0
                            ? static_cast<int>(std::floor((d.value(r, c) - *lo) / width))
                            : 0;
        m(r, c) = std::clamp(bin, 0, kDistanceBins - 1);
      }
    }
    return m;
  };
  const Eigen::MatrixXi s = codes(synth);
  const Eigen::MatrixXi t = codes(targets);
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    int best = std::numeric_limits<int>::max();
    for (Eigen::Index j = 0; j < s.rows() && best > 0; ++j) {
      best = std::min(best, static_cast<int>((s.row(j).array() != t.row(i).array()).count()));
    }
    out[i] = static_cast<double>(best) / schema.size();
  }
  return out;
}

absl::StatusOr<MiaStrategyResult> MiaDistance(const Dataset& synth,
                                              const Dataset& members,
                                              const Dataset& non_members,
                                              DistanceMetric metric,
                                              uint64_t seed) {
  ASSIGN_OR_RETURN(std::vector<double> dm,
                   NearestSyntheticDistances(synth, members, metric));
  ASSIGN_OR_RETURN(std::vector<double> dn,
                   NearestSyntheticDistances(synth, non_members, metric));
  // Closer means more likely a member.
  return ThresholdAttack(
      metric == DistanceMetric::kHamming ? "distance_hamming" : "distance_l2",
      Negated(std::move(dm)), Negated(std::move(dn)), seed);
}

absl::StatusOr<MiaStrategyResult> MiaKde(const Dataset& synth,
                                         const Dataset& members,
                                         const Dataset& non_members,
                                         uint64_t seed) {
  RETURN_IF_ERROR(SameSchema(synth, members));
  RETURN_IF_ERROR(SameSchema(synth, non_members));
  if (synth.num_rows() == 0) return absl::InvalidArgumentError("mia: empty synth");
  const SyntheticEncoder encoder(synth);
  absl::StatusOr<KernelDensity> kde = KernelDensity::Fit(encoder.Encode(synth));
  if (!kde.ok()) {
    MiaStrategyResult flagged;
    flagged.strategy = "kernel_density";
    flagged.flagged = true;
    return flagged;
  }
  auto scores = [&](const Dataset& d) {
    const Eigen::MatrixXd x = encoder.Encode(d);
    std::vector<double> out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = kde->LogPdf(x.row(i));
    return out;
  };
  return ThresholdAttack("kernel_density", scores(members), scores(non_members), seed);
}

Eigen::VectorXd ShadowFeatureVector(const Dataset& synth, const Dataset& reference,
                                    ShadowFeatures kind) {
  const TableSchema& schema = synth.schema();
  std::vector<double> f;
  const double n = std::max<size_t>(1, synth.num_rows());
  for (size_t c = 0; c < schema.size(); ++c) {
    const std::vector<double>& col = synth.column(c);
    if (schema.column(c).is_categorical()) {
      std::vector<double> freq(schema.column(c).categories.size(), 0.0);
      for (double v : col) freq[static_cast<size_t>(v)] += 1.0 / n;
      f.insert(f.end(), freq.begin(), freq.end());
      continue;
    }
    if (kind == ShadowFeatures::kNaive) {
      if (col.empty()) {
        f.insert(f.end(), {0.0, 0.0, 0.0});
        continue;
      }
      const double mean = std::accumulate(col.begin(), col.end(), 0.0) / col.size();
      double ss = 0.0;
      for (double v : col) ss += (v - mean) * (v - mean);
      f.insert(f.end(), {mean, Median(col), ss / col.size()});
      continue;
    }
    const auto [lo, hi] = std::minmax_element(reference.column(c).begin(),
                                              reference.column(c).end());
    const double width = (*hi - *lo) / kShadowHistBins;
    std::vector<double> hist(kShadowHistBins, 0.0);
    for (double v : col) {
      const int bin = width > 0.0 ? static_cast<int>(std::floor((v - *lo) / width)) : 0;
      hist[std::clamp(bin, 0, kShadowHistBins - 1)] += 1.0 / n;
    }
    f.insert(f.end(), hist.begin(), hist.end());
  }
  return Eigen::Map<Eigen::VectorXd>(f.data(), f.size());
}

absl::StatusOr<std::vector<MiaStrategyResult>> MiaShadow(
    const Dataset& reference, const Dataset& members, const Dataset& non_members,
    const Dataset& attacked, const SynthesizerFn& trainer,
    const std::vector<ShadowFeatures>& kinds, const ShadowOptions& options,
    uint64_t seed) {
  RETURN_IF_ERROR(SameSchema(reference, members));
  RETURN_IF_ERROR(SameSchema(reference, non_members));
  RETURN_IF_ERROR(SameSchema(reference, attacked));
  if (options.n_shadow < 2) return absl::InvalidArgumentError("mia: need n_shadow >= 2");
  if (reference.num_rows() == 0) return absl::InvalidArgumentError("mia: empty reference");
  if (kinds.empty()) return std::vector<MiaStrategyResult>{};
  const Rng root(seed);
  std::vector<std::pair<Dataset, int>> targets;
  for (size_t r = 0; r < members.num_rows(); ++r) {
    targets.push_back({members.SelectRows({r}), 1});
  }
  for (size_t r = 0; r < non_members.num_rows(); ++r) {
    targets.push_back({non_members.SelectRows({r}), 0});
  }
  std::vector<Eigen::VectorXd> attacked_features;
  for (ShadowFeatures kind : kinds) {
    attacked_features.push_back(ShadowFeatureVector(attacked, reference, kind));
  }
  std::vector<size_t> correct(kinds.size(), 0);
  for (size_t t = 0; t < targets.size(); ++t) {
    Rng rng = root.Fork(uint64_t{t});
    std::vector<std::vector<Eigen::VectorXd>> features(kinds.size());
    std::vector<int> labels;
    for (int i = 0; i < options.n_shadow; ++i) {
      absl::Status last_error = absl::OkStatus();
      bool done = false;
      for (int attempt = 0; attempt <= options.max_retries && !done; ++attempt) {
        const Dataset subset = reference.SelectRows(
            SampleRows(reference.num_rows(), options.shadow_train_size, rng));
        ASSIGN_OR_RETURN(Dataset with_target, Dataset::Concat(subset, targets[t].first));
        const uint64_t s0 = rng.Fork("out").seed() + i;
        const uint64_t s1 = rng.Fork("in").seed() + i;
        absl::StatusOr<Dataset> out = trainer(subset, options.shadow_synth_size, s0);
        absl::StatusOr<Dataset> in = trainer(with_target, options.shadow_synth_size, s1);
        if (!out.ok() || !in.ok()) {
          last_error = out.ok() ? in.status() : out.status();
          continue;
        }
        for (size_t k = 0; k < kinds.size(); ++k) {
          features[k].push_back(ShadowFeatureVector(*out, reference, kinds[k]));
          features[k].push_back(ShadowFeatureVector(*in, reference, kinds[k]));
        }
        labels.push_back(0);
        labels.push_back(1);
        done = true;
      }
      if (!done) {
        return absl::InternalError(absl::StrCat(
            "mia: shadow training failed after retries: ", last_error.message()));
      }
    }
    for (size_t k = 0; k < kinds.size(); ++k) {
      Eigen::MatrixXd x(labels.size(), features[k][0].size());
      for (size_t i = 0; i < labels.size(); ++i) x.row(i) = features[k][i].transpose();
      ASSIGN_OR_RETURN(TreeEnsemble model, FitClassifier(x, labels));
      ASSIGN_OR_RETURN(Eigen::VectorXd p,
                       PredictProba(model, attacked_features[k].transpose()));
      correct[k] += (p(0) > 0.5 ? 1 : 0) == targets[t].second;
    }
  }
  std::vector<MiaStrategyResult> results;
  for (size_t k = 0; k < kinds.size(); ++k) {
    MiaStrategyResult r;
    r.strategy = kinds[k] == ShadowFeatures::kNaive ? "naive_groundhog" : "hist_groundhog";
    if (targets.empty()) {
      r.flagged = true;
    } else {
      r.tau = static_cast<double>(correct[k]) / targets.size();
    }
    results.push_back(r);
  }
  return results;
}

AttackReport MiaRisk(const std::vector<MiaStrategyResult>& strategies) {
  AttackReport report;
  report.attack = "mia";
  report.tau_control = 0.5;
  report.tau_train = 0.5;
  nlohmann::json details = nlohmann::json::array();
  for (const MiaStrategyResult& s : strategies) {
    report.tau_train = std::max(report.tau_train, s.tau);
    details.push_back({{"strategy", s.strategy}, {"tau", s.tau}, {"flagged", s.flagged}});
  }
  report.risk = 100.0 * std::max(0.0, (report.tau_train - 0.5) / 0.5);
  report.details = {{"strategies", details}};
  return report;
}

nlohmann::json PrivacyReport::ToJson() const {
  return {{"singling_out", singling_out.ToJson()},
          {"linkability", linkability.ToJson()},
          {"aia", aia.ToJson()},
          {"mia", mia.ToJson()}};
}

absl::StatusOr<PrivacyReport> EvaluatePrivacy(const Dataset& train,
                                              const Dataset& control,
                                              const Dataset& synth,
                                              const PrivacySettings& settings,
                                              const SynthesizerFn* trainer,
                                              uint64_t seed) {
  RETURN_IF_ERROR(SameSchema(synth, train));
  RETURN_IF_ERROR(SameSchema(synth, control));
  if (train.num_rows() == 0 || control.num_rows() == 0 || synth.num_rows() == 0) {
    return absl::InvalidArgumentError("privacy: empty input table");
  }
  if (train.HasMissing() || control.HasMissing() || synth.HasMissing()) {
    return absl::InvalidArgumentError("privacy: inputs must be missing-free");
  }
  const size_t ncols = synth.num_columns();
  if (ncols < 2) return absl::InvalidArgumentError("privacy: need at least two columns");
  const Rng root(seed);
  PrivacyReport report;

  // Singling out compares equal-sized tables.
  {
    Rng rng = root.Fork("singling_out");
    const size_t n = std::min(train.num_rows(), control.num_rows());
    const Dataset t = train.SelectRows(SampleRows(train.num_rows(), n, rng));
    const Dataset c = control.SelectRows(SampleRows(control.num_rows(), n, rng));
    ASSIGN_OR_RETURN(AttackReport uni,
                     SinglingOut(synth, t, c, SinglingOutMode::kUnivariate,
                                 settings.n_attacks, rng.Fork("uni").seed()));
    ASSIGN_OR_RETURN(AttackReport multi,
                     SinglingOut(synth, t, c, SinglingOutMode::kMultivariate,
                                 settings.n_attacks, rng.Fork("multi").seed()));
    report.singling_out = uni.risk >= multi.risk ? uni : multi;
    report.singling_out.details = {{"univariate", uni.ToJson()},
                                   {"multivariate", multi.ToJson()}};
    report.singling_out.attack = "singling_out";
  }

  Rng target_rng = root.Fork("targets");
  const Dataset train_targets = train.SelectRows(
      SampleRows(train.num_rows(), settings.n_targets, target_rng));
  const Dataset control_targets = control.SelectRows(
      SampleRows(control.num_rows(), settings.n_targets, target_rng));

  {
    std::vector<size_t> a;
    std::vector<size_t> b;
    for (size_t c = 0; c < ncols; ++c) (c < (ncols + 1) / 2 ? a : b).push_back(c);
    const size_t k = std::min(settings.k_neighbors, synth.num_rows());
    ASSIGN_OR_RETURN(report.linkability,
                     Linkability(synth, train_targets, control_targets, a, b, k));
  }

  {
    nlohmann::json per_secret = nlohmann::json::array();
    double tau_train = 0.0;
    double tau_control = 0.0;
    double risk = 0.0;
    for (size_t s = 0; s < ncols; ++s) {
      std::vector<size_t> known;
      for (size_t c = 0; c < ncols; ++c) {
        if (c != s) known.push_back(c);
      }
      double range = 0.0;
      if (!synth.schema().column(s).is_categorical()) {
        const auto [lo, hi] =
            std::minmax_element(train.column(s).begin(), train.column(s).end());
        range = *hi - *lo;
      }
      ASSIGN_OR_RETURN(AttackReport r,
                       AttributeInference(synth, train_targets, control_targets,
                                          known, s, range));
      tau_train += r.tau_train / ncols;
      tau_control += r.tau_control / ncols;
      risk += r.risk / ncols;
      per_secret.push_back(r.ToJson());
    }
    report.aia.attack = "aia";
    report.aia.tau_train = tau_train;
    report.aia.tau_control = tau_control;
    report.aia.risk = risk;
    report.aia.n_targets = train_targets.num_rows();
    report.aia.details = {{"per_secret", per_secret}};
  }

  {
    Rng rng = root.Fork("mia");
    const std::vector<size_t> member_rows =
        SampleRows(train.num_rows(), settings.n_mia_targets, rng);
    const std::vector<size_t> non_member_rows =
        SampleRows(control.num_rows(), settings.n_mia_targets, rng);
    const Dataset members = train.SelectRows(member_rows);
    const Dataset non_members = control.SelectRows(non_member_rows);
    std::vector<MiaStrategyResult> strategies;
    ASSIGN_OR_RETURN(MiaStrategyResult hamming,
                     MiaDistance(synth, members, non_members, DistanceMetric::kHamming,
                                 rng.Fork("hamming").seed()));
    ASSIGN_OR_RETURN(MiaStrategyResult l2,
                     MiaDistance(synth, members, non_members, DistanceMetric::kL2,
                                 rng.Fork("l2").seed()));
    ASSIGN_OR_RETURN(MiaStrategyResult kde,
                     MiaKde(synth, members, non_members, rng.Fork("kde").seed()));
    strategies = {hamming, l2, kde};
    // Shadow models need a reference disjoint from every target.
    std::vector<size_t> reference_rows;
    std::vector<char> used(control.num_rows(), 0);
    for (size_t r : non_member_rows) used[r] = 1;
    for (size_t r = 0; r < control.num_rows(); ++r) {
      if (!used[r]) reference_rows.push_back(r);
    }
    if (trainer != nullptr && settings.n_shadow_targets > 0 && !reference_rows.empty()) {
      const size_t n = std::min(settings.n_shadow_targets, member_rows.size());
      std::vector<size_t> m_idx(n);
      std::vector<size_t> n_idx(std::min(n, non_member_rows.size()));
      std::iota(m_idx.begin(), m_idx.end(), 0);
      std::iota(n_idx.begin(), n_idx.end(), 0);
      ASSIGN_OR_RETURN(
          std::vector<MiaStrategyResult> shadow,
          MiaShadow(control.SelectRows(reference_rows), members.SelectRows(m_idx),
                    non_members.SelectRows(n_idx), synth, *trainer,
                    {ShadowFeatures::kNaive, ShadowFeatures::kHist}, settings.shadow,
                    rng.Fork("shadow").seed()));
      strategies.insert(strategies.end(), shadow.begin(), shadow.end());
    }
    report.mia = MiaRisk(strategies);
    report.mia.n_targets = members.num_rows();
  }
  return report;
}

}  // namespace dptldm
