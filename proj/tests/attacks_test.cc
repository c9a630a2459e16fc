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
#include <numeric>

#include "dptldm/fixtures.h"
#include "dptldm/random.h"
#include "dptldm/status_macros.h"
#include "dptldm/synthesizer.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dptldm {
namespace {

TableSchema SmallMixedSchema() {
  return MakeSchema({{"x", ColumnKind::kContinuous, {}},
                     {"c", ColumnKind::kCategorical, {"a", "b", "c"}},
                     {"y", ColumnKind::kContinuous, {}}});
}

// Values on a coarse grid so that distance ties occur.
Dataset RandomSmall(size_t n, Rng& rng) {
  std::vector<double> x(n), c(n), y(n);
  for (size_t i = 0; i < n; ++i) {
    x[i] = rng.UniformInt(4);
    c[i] = rng.UniformInt(3);
    y[i] = 0.5 * rng.UniformInt(3);
  }
  return MakeDataset(SmallMixedSchema(), {x, c, y});
}

// Gower distance written out directly from its definition.
double BruteGower(const Dataset& ref, const Dataset& q, size_t qr, size_t rr,
                  const std::vector<size_t>& cols) {
  double sum = 0.0;
  for (size_t c : cols) {
    const double a = q.value(qr, c), b = ref.value(rr, c);
    if (ref.schema().column(c).kind == ColumnKind::kCategorical) {
      sum += a != b;
      continue;
    }
    const auto [lo, hi] = std::minmax_element(ref.column(c).begin(), ref.column(c).end());
    const double range = *hi - *lo;
    sum += range > 0 ? std::min(1.0, std::abs(a - b) / range) : double(a != b);
  }
  return sum / cols.size();
}

Dataset Rows(const Dataset& d, size_t from, size_t to) {
  std::vector<size_t> idx(to - from);
  std::iota(idx.begin(), idx.end(), from);
  return d.SelectRows(idx);
}

TEST(RelativeRiskTest, Examples) {
  EXPECT_EQ(RelativeRisk(0.3, 0.3), 0.0);
  EXPECT_EQ(RelativeRisk(1.0, 0.0), 100.0);
  EXPECT_NEAR(RelativeRisk(0.6, 0.2), 50.0, 1e-12);
  EXPECT_EQ(RelativeRisk(0.1, 0.5), 0.0);
  EXPECT_EQ(RelativeRisk(1.0, 1.0), 0.0);
}

TEST(NeighborIndexTest, DistanceAxioms) {
  Rng rng(1);
  const Dataset d = RandomSmall(8, rng);
  const NeighborIndex index = *NeighborIndex::Create(d, {0, 1, 2});
  for (size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(index.Distance(d, i, i), 0.0);
    for (size_t j = 0; j < 8; ++j) {
      const double dij = index.Distance(d, i, j);
      EXPECT_EQ(dij, index.Distance(d, j, i));
      EXPECT_GE(dij, 0.0);
      EXPECT_LE(dij, 1.0);
    }
  }
}

TEST(NeighborIndexTest, MatchesExhaustiveSearch) {
  Rng rng(2);
  const std::vector<std::vector<size_t>> column_sets = {{0}, {1}, {2}, {0, 1}, {1, 2}, {0, 1, 2}};
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset ref = RandomSmall(1 + rng.UniformInt(8), rng);
    const Dataset q = RandomSmall(1 + rng.UniformInt(8), rng);
    const std::vector<size_t>& cols = column_sets[rng.UniformInt(column_sets.size())];
    const NeighborIndex index = *NeighborIndex::Create(ref, cols);
    for (size_t r = 0; r < q.num_rows(); ++r) {
      std::vector<std::pair<double, size_t>> all;
      for (size_t s = 0; s < ref.num_rows(); ++s) {
        all.push_back({BruteGower(ref, q, r, s, cols), s});
        EXPECT_NEAR(index.Distance(q, r, s), all.back().first, 1e-15);
      }
      std::sort(all.begin(), all.end());
      const size_t k = 1 + rng.UniformInt(ref.num_rows());
      std::vector<size_t> expected;
      for (size_t i = 0; i < k; ++i) expected.push_back(all[i].second);
      EXPECT_EQ(index.KNearest(q, r, k), expected);
    }
  }
}

TEST(NeighborIndexTest, Errors) {
  Rng rng(3);
  const Dataset d = RandomSmall(4, rng);
  EXPECT_FALSE(NeighborIndex::Create(d, {}).ok());
  EXPECT_FALSE(NeighborIndex::Create(d, {3}).ok());
  EXPECT_FALSE(NeighborIndex::Create(Dataset::Empty(d.schema()), {0}).ok());
}

TEST(PredicateTest, ExactlyOneRule) {
  const Dataset d = MakeDataset(SmallMixedSchema(), {{1, 2, 2, 5}, {0, 1, 1, 2}, {0, 0, 0, 0}});
  Predicate one{{{0, false, 0, 4.0, 10.0}}};
  Predicate two{{{1, true, 1, 0, 0}}};
  Predicate conj{{{0, false, 0, 1.5, 2.0}, {1, true, 1, 0, 0}}};
  EXPECT_EQ(one.CountMatches(d), 1u);
  EXPECT_EQ(two.CountMatches(d), 2u);
  EXPECT_EQ(conj.CountMatches(d), 2u);
  // lo is exclusive, hi inclusive.
  EXPECT_TRUE((Predicate{{{0, false, 0, 0.5, 1.0}}}).Matches(d, 0));
  EXPECT_FALSE((Predicate{{{0, false, 0, 1.0, 1.5}}}).Matches(d, 0));
}

TEST(SinglingOutTest, ReproducedExtremesSingleOutTrain) {
  const TableSchema s = MakeSchema({{"x", ColumnKind::kContinuous, {}}});
  std::vector<double> train(400), control(400);
  Rng rng(4);
  for (int i = 0; i < 400; ++i) {
    train[i] = rng.Normal();
    control[i] = rng.Normal();
  }
  const Dataset t = MakeDataset(s, {train});
  const Dataset c = MakeDataset(s, {control});
  absl::StatusOr<AttackReport> r = SinglingOut(t, t, c, SinglingOutMode::kUnivariate, 8, 1);
  ASSERT_OK(r);
  EXPECT_EQ(r->attack, "singling_out_univariate");
  EXPECT_EQ(r->n_targets, 8u);
  EXPECT_EQ(r->tau_train, 1.0);
  EXPECT_LT(r->tau_control, 1.0);
  EXPECT_GT(r->risk, 0.0);
}

TEST(SinglingOutTest, PredicatesIsolateOneSyntheticValue) {
  const Dataset synth = MixedFixture(500, 5);
  const auto uni = *SinglingOutPredicates(synth, SinglingOutMode::kUnivariate, 50, 2);
  ASSERT_FALSE(uni.empty());
  for (const Predicate& p : uni) {
    ASSERT_EQ(p.conditions.size(), 1u);
    EXPECT_EQ(p.CountMatches(synth), 1u);
  }
  const auto multi = *SinglingOutPredicates(synth, SinglingOutMode::kMultivariate, 50, 2);
  ASSERT_EQ(multi.size(), 50u);
  for (const Predicate& p : multi) {
    EXPECT_EQ(p.conditions.size(), 3u);
    EXPECT_GE(p.CountMatches(synth), 1u);
  }
  EXPECT_EQ(multi.size(),
            SinglingOutPredicates(synth, SinglingOutMode::kMultivariate, 50, 2)->size());
}

TEST(SinglingOutTest, ReducesAttackCountWithWarning) {
  const TableSchema s = MakeSchema({{"c", ColumnKind::kCategorical, {"a", "b"}}});
  const Dataset d = MakeDataset(s, {{0, 0, 1, 0}});
  absl::StatusOr<AttackReport> r = SinglingOut(d, d, d, SinglingOutMode::kUnivariate, 5, 0);
  ASSERT_OK(r);
  EXPECT_EQ(r->n_targets, 1u);
  EXPECT_TRUE(r->details.contains("warning"));
}

TEST(SinglingOutTest, DisjointCategoricalNoiseHasNoRisk) {
  std::vector<std::string> cats;
  for (char ch = 'a'; ch <= 'j'; ++ch) cats.push_back(std::string(1, ch));
  const TableSchema s = MakeSchema({{"u", ColumnKind::kCategorical, cats},
                                    {"v", ColumnKind::kCategorical, cats},
                                    {"w", ColumnKind::kCategorical, cats}});
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    auto table = [&](size_t n, int offset) {
      std::vector<std::vector<double>> cols(3, std::vector<double>(n));
      for (auto& col : cols) {
        for (double& v : col) v = offset + rng.UniformInt(5);
      }
      return MakeDataset(s, cols);
    };
    const Dataset train = table(300, 0), control = table(300, 0), synth = table(300, 5);
    for (SinglingOutMode mode : {SinglingOutMode::kUnivariate, SinglingOutMode::kMultivariate}) {
      absl::StatusOr<AttackReport> r = SinglingOut(synth, train, control, mode, 50, seed);
      ASSERT_OK(r);
      EXPECT_LE(r->risk, 10.0);
    }
  }
}

TEST(LinkabilityTest, ExactCopyAndDegenerateK) {
  const Dataset d = MixedFixture(200, 6);
  const Dataset targets = Rows(d, 0, 20);
  const Dataset control = MixedFixture(20, 7);
  absl::StatusOr<AttackReport> r = Linkability(d, targets, control, {0, 1}, {2, 3, 4}, 1);
  ASSERT_OK(r);
  EXPECT_EQ(r->attack, "linkability");
  EXPECT_EQ(r->tau_train, 1.0);
  absl::StatusOr<AttackReport> all = Linkability(d, targets, control, {0}, {1}, d.num_rows());
  ASSERT_OK(all);
  EXPECT_EQ(all->tau_train, 1.0);
  EXPECT_EQ(all->tau_control, 1.0);
  EXPECT_EQ(all->risk, 0.0);
}

TEST(LinkabilityTest, Errors) {
  const Dataset d = MixedFixture(30, 8);
  EXPECT_FALSE(Linkability(d, d, d, {0, 1}, {1, 2}, 1).ok());
  EXPECT_FALSE(Linkability(d, d, d, {}, {1}, 1).ok());
  EXPECT_FALSE(Linkability(d, d, d, {0}, {1}, 0).ok());
  EXPECT_FALSE(Linkability(d, d, d, {0}, {1}, 31).ok());
}

TEST(LinkabilityTest, MarginalSynthHasLittleRisk) {
  double total = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset train = MixedFixture(1000, 100 + seed);
    const Dataset control = MixedFixture(200, 200 + seed);
    const Dataset synth = MarginalSampler::Fit(train, seed)->Generate(1000);
    total += Linkability(synth, Rows(train, 0, 200), control, {0, 1}, {2, 3, 4}, 5)->risk;
  }
  EXPECT_LE(total / 5, 10.0);
}

TEST(AttributeInferenceTest, MemorizedSynth) {
  const Dataset d = MixedFixture(300, 9);
  const Dataset control = MixedFixture(100, 10);
  const std::vector<double>& income = d.column(1);
  const double range = *std::max_element(income.begin(), income.end()) -
                       *std::min_element(income.begin(), income.end());
  absl::StatusOr<AttackReport> r =
      AttributeInference(d, Rows(d, 0, 100), control, {0, 2, 3, 4}, 1, range);
  ASSERT_OK(r);
  EXPECT_EQ(r->attack, "aia");
  EXPECT_EQ(r->tau_train, 1.0);
  EXPECT_GT(r->risk, 50.0);
}

TEST(AttributeInferenceTest, ContinuousTolerance) {
  const TableSchema s = MakeSchema({{"k", ColumnKind::kCategorical, {"a", "b"}},
                                    {"v", ColumnKind::kContinuous, {}}});
  const Dataset synth = MakeDataset(s, {{0}, {10.4}});
  const Dataset hit = MakeDataset(s, {{0}, {10.0}});
  const Dataset miss = MakeDataset(s, {{0}, {9.8}});
  absl::StatusOr<AttackReport> r = AttributeInference(synth, hit, miss, {0}, 1, 10.0);
  ASSERT_OK(r);
  EXPECT_EQ(r->tau_train, 1.0);
  EXPECT_EQ(r->tau_control, 0.0);
}

TEST(AttributeInferenceTest, ConstantSecretAndErrors) {
  const TableSchema s = MakeSchema({{"k", ColumnKind::kCategorical, {"a", "b"}},
                                    {"v", ColumnKind::kContinuous, {}}});
  const Dataset d = MakeDataset(s, {{0, 1}, {3.0, 3.0}});
  absl::StatusOr<AttackReport> r = AttributeInference(d, d, d, {0}, 1, 0.0);
  ASSERT_OK(r);
  EXPECT_EQ(r->risk, 0.0);
  EXPECT_TRUE(r->details.contains("flag"));
  EXPECT_FALSE(AttributeInference(d, d, d, {1}, 1, 1.0).ok());
  EXPECT_FALSE(AttributeInference(d, d, d, {}, 1, 1.0).ok());
}

TEST(AttributeInferenceTest, IndependentSecretHasLittleRisk) {
  double total = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset train = MixedFixture(1000, 300 + seed);
    const Dataset control = MixedFixture(200, 400 + seed);
    const Dataset synth = MarginalSampler::Fit(train, seed)->Generate(1000);
    // flag is independent of age and score given nothing else.
    total += AttributeInference(synth, Rows(train, 0, 200), control, {0}, 3, 1.0)->risk;
  }
  EXPECT_LE(total / 5, 10.0);
}

TEST(ThresholdAttackTest, SeparatedAndDegenerate) {
  std::vector<double> members(50, 2.0), others(50, -2.0);
  const MiaStrategyResult r = ThresholdAttack("s", members, others, 1);
  EXPECT_FALSE(r.flagged);
  EXPECT_EQ(r.tau, 1.0);
  const MiaStrategyResult eq = ThresholdAttack("s", {1, 1, 1}, {1, 1, 1}, 1);
  EXPECT_TRUE(eq.flagged);
  EXPECT_EQ(eq.tau, 0.5);
  EXPECT_TRUE(ThresholdAttack("s", {1}, {2}, 1).flagged);
}

TEST(MiaDistanceTest, HammingOfIdenticalRowsIsZero) {
  const Dataset d = MixedFixture(50, 11);
  for (DistanceMetric m : {DistanceMetric::kHamming, DistanceMetric::kL2}) {
    const std::vector<double> dist = *NearestSyntheticDistances(d, Rows(d, 0, 10), m);
    for (double v : dist) EXPECT_EQ(v, 0.0);
  }
  EXPECT_FALSE(NearestSyntheticDistances(Dataset::Empty(d.schema()), d, DistanceMetric::kL2).ok());
}

TEST(MiaDistanceTest, VerbatimMembersAndFreshNoise) {
  const Dataset members = MixedFixture(200, 12);
  const Dataset others = MixedFixture(200, 13);
  for (DistanceMetric m : {DistanceMetric::kHamming, DistanceMetric::kL2}) {
    // The median threshold misplaces members when the calibration half is
    // unbalanced, and binned Hamming distances tie often at the median.
    double copies = 0.0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
      copies += MiaDistance(members, members, others, m, seed)->tau;
    }
    EXPECT_GE(copies / 5, m == DistanceMetric::kL2 ? 0.85 : 0.8);
    double total = 0.0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
      total += MiaDistance(MixedFixture(400, 20 + seed), members, others, m, seed)->tau;
    }
    EXPECT_NEAR(total / 5, 0.5, 0.15);
  }
}

TEST(MiaKdeTest, DensityAroundMembers) {
  const TableSchema s = MakeSchema({{"x", ColumnKind::kContinuous, {}},
                                    {"y", ColumnKind::kContinuous, {}}});
  Rng rng(14);
  auto blob = [&](size_t n, double center) {
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = center + rng.Normal();
      y[i] = center + rng.Normal();
    }
    return MakeDataset(s, {x, y});
  };
  const Dataset members = blob(100, 0.0);
  const Dataset others = blob(100, 6.0);
  const Dataset synth = blob(300, 0.0);
  EXPECT_EQ(MiaKde(synth, members, others, 1)->strategy, "kernel_density");
  double near = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) near += MiaKde(synth, members, others, seed)->tau;
  EXPECT_GE(near / 5, 0.9);
  double total = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    total += MiaKde(MixedFixture(400, 30 + seed), MixedFixture(200, 40 + seed),
                    MixedFixture(200, 50 + seed), seed)->tau;
  }
  EXPECT_NEAR(total / 5, 0.5, 0.15);
}

// Reference rows share one id category; every target owns a unique id, so a
// synthesizer that echoes its input reveals membership in its frequencies.
// Target ids precede the shared id so tied splits pick the target's own id.
TEST(MiaShadowTest, IdentityStubLeaksThroughHistograms) {
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("t" + std::to_string(i));
  ids.push_back("common");
  const TableSchema s = MakeSchema({{"id", ColumnKind::kCategorical, ids},
                                    {"v", ColumnKind::kContinuous, {}}});
  Rng rng(16);
  auto rows = [&](std::vector<double> id) {
    std::vector<double> v(id.size());
    for (double& x : v) x = rng.Normal();
    return MakeDataset(s, {id, v});
  };
  const Dataset reference = rows(std::vector<double>(300, 20.0));
  std::vector<double> member_ids, other_ids;
  for (int i = 0; i < 10; ++i) {
    member_ids.push_back(i);
    other_ids.push_back(10 + i);
  }
  const Dataset members = rows(member_ids);
  const Dataset others = rows(other_ids);
  // Sized so a member id has about the frequency it has in an "in" shadow.
  const Dataset attacked = *Dataset::Concat(rows(std::vector<double>(40, 20.0)), members);
  const SynthesizerFn identity = [](const Dataset& train, size_t, uint64_t) {
    return absl::StatusOr<Dataset>(train);
  };
  ShadowOptions opt;
  opt.shadow_train_size = 50;
  absl::StatusOr<std::vector<MiaStrategyResult>> r =
      MiaShadow(reference, members, others, attacked, identity,
                {ShadowFeatures::kNaive, ShadowFeatures::kHist}, opt, 1);
  ASSERT_OK(r);
  ASSERT_EQ(r->size(), 2u);
  EXPECT_EQ((*r)[1].strategy, "hist_groundhog");
  EXPECT_GE((*r)[1].tau, 0.9);
}

TEST(MiaShadowTest, MarginalBaselineIsNearChance) {
  const SynthesizerFn marginal = [](const Dataset& train, size_t n, uint64_t seed) -> absl::StatusOr<Dataset> {
    ASSIGN_OR_RETURN(MarginalSampler m, MarginalSampler::Fit(train, seed));
    return m.Generate(n);
  };
  double total = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset reference = MixedFixture(2000, 500 + seed);
    const Dataset train = MixedFixture(500, 600 + seed);
    const Dataset others = MixedFixture(10, 700 + seed);
    const Dataset attacked = *marginal(train, 500, seed);
    ShadowOptions opt;
    const auto r = *MiaShadow(reference, Rows(train, 0, 10), others, attacked, marginal,
                              {ShadowFeatures::kHist}, opt, seed);
    total += r[0].tau;
  }
  EXPECT_NEAR(total / 5, 0.5, 0.15);
}

TEST(MiaShadowTest, TrainerFailureIsReported) {
  const Dataset d = MixedFixture(50, 17);
  const SynthesizerFn broken = [](const Dataset&, size_t, uint64_t) -> absl::StatusOr<Dataset> {
    return absl::InternalError("boom");
  };
  absl::StatusOr<std::vector<MiaStrategyResult>> r =
      MiaShadow(d, Rows(d, 0, 2), Rows(d, 2, 4), d, broken, {ShadowFeatures::kHist}, {}, 1);
  EXPECT_FALSE(r.ok());
  ShadowOptions one;
  one.n_shadow = 1;
  EXPECT_FALSE(MiaShadow(d, d, d, d, broken, {ShadowFeatures::kHist}, one, 1).ok());
}

TEST(ShadowFeatureTest, Layout) {
  const TableSchema s = MakeSchema({{"x", ColumnKind::kContinuous, {}},
                                    {"c", ColumnKind::kCategorical, {"a", "b"}}});
  const Dataset ref = MakeDataset(s, {{0, 10}, {0, 1}});
  const Dataset d = MakeDataset(s, {{1, 3, 8}, {1, 1, 0}});
  const Eigen::VectorXd naive = ShadowFeatureVector(d, ref, ShadowFeatures::kNaive);
  ASSERT_EQ(naive.size(), 5);
  EXPECT_DOUBLE_EQ(naive(0), 4.0);
  EXPECT_DOUBLE_EQ(naive(1), 3.0);
  EXPECT_DOUBLE_EQ(naive(2), 26.0 / 3);
  EXPECT_DOUBLE_EQ(naive(3), 1.0 / 3);
  EXPECT_DOUBLE_EQ(naive(4), 2.0 / 3);
  const Eigen::VectorXd hist = ShadowFeatureVector(d, ref, ShadowFeatures::kHist);
  ASSERT_EQ(hist.size(), 12);
  EXPECT_NEAR(hist.head(10).sum(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(hist(1), 1.0 / 3);
  EXPECT_DOUBLE_EQ(hist(3), 1.0 / 3);
  EXPECT_DOUBLE_EQ(hist(8), 1.0 / 3);
}

TEST(MiaRiskTest, Examples) {
  EXPECT_EQ(MiaRisk({{"a", 0.5}, {"b", 0.5}}).risk, 0.0);
  EXPECT_NEAR(MiaRisk({{"a", 0.6}, {"b", 0.7}}).risk, 40.0, 1e-12);
  EXPECT_EQ(MiaRisk({{"a", 1.0}}).risk, 100.0);
  EXPECT_EQ(MiaRisk({{"a", 0.3}}).risk, 0.0);
  EXPECT_EQ(MiaRisk({{"a", 0.6}, {"b", 0.7}}).details["strategies"].size(), 2u);
}

TEST(EvaluatePrivacyTest, OverfitBeatsNull) {
  const Dataset train = MixedFixture(600, 18);
  const Dataset control = MixedFixture(600, 19);
  PrivacySettings settings;
  settings.n_targets = 100;
  settings.n_attacks = 100;
  settings.n_mia_targets = 100;
  const PrivacyReport overfit = *EvaluatePrivacy(train, control, train, settings, nullptr, 1);
  const PrivacyReport null =
      *EvaluatePrivacy(train, control, MixedFixture(600, 20), settings, nullptr, 1);
  EXPECT_GE(overfit.aia.risk, 60.0);
  EXPECT_GE(overfit.mia.risk, 60.0);
  EXPECT_GT(overfit.singling_out.risk, null.singling_out.risk);
  EXPECT_LE(null.mia.risk, 30.0);
  const nlohmann::json j = overfit.ToJson();
  for (const char* key : {"singling_out", "linkability", "aia", "mia"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  for (const AttackReport* r : {&overfit.singling_out, &overfit.linkability, &overfit.aia,
                                &overfit.mia, &null.singling_out, &null.linkability,
                                &null.aia, &null.mia}) {
    EXPECT_GE(r->risk, 0.0);
    EXPECT_LE(r->risk, 100.0);
  }
}

TEST(EvaluatePrivacyTest, Errors) {
  const Dataset d = MixedFixture(50, 21);
  const TableSchema s = MakeSchema({{"x", ColumnKind::kContinuous, {}}});
  const Dataset one = MakeDataset(s, {{1, 2, 3}});
  EXPECT_FALSE(EvaluatePrivacy(d, d, one, {}, nullptr, 1).ok());
  EXPECT_FALSE(EvaluatePrivacy(one, one, one, {}, nullptr, 1).ok());
  EXPECT_FALSE(EvaluatePrivacy(Dataset::Empty(d.schema()), d, d, {}, nullptr, 1).ok());
}

}  // namespace
}  // namespace dptldm
