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

#include "dptldm/fixtures.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dptldm/random.h"

namespace dptldm {

TableSchema MixedFixtureSchema() {
  return *TableSchema::Create({
      {"age", ColumnKind::kContinuous, {}},
      {"income", ColumnKind::kContinuous, {}},
      {"segment", ColumnKind::kCategorical, {"high", "low", "mid"}},
      {"flag", ColumnKind::kCategorical, {"no", "yes"}},
      {"score", ColumnKind::kContinuous, {}},
  });
}

Dataset MixedFixture(size_t n, uint64_t seed) {
  constexpr int kHigh = 0;
  constexpr int kLow = 1;
  constexpr int kMid = 2;
  Rng rng(seed);
  std::vector<std::vector<double>> cols(5, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    const double age = std::clamp(45.0 + 12.0 * rng.Normal(), 18.0, 90.0);
    const double income = 12.0 + 0.8 * age + 8.0 * rng.Normal();
    const double tier = income + 6.0 * rng.Normal();
    const int segment = tier < 40.0 ? kLow : (tier < 60.0 ? kMid : kHigh);
    const double p_yes = segment == kLow ? 0.2 : (segment == kMid ? 0.5 : 0.8);
    const double score =
        (segment == kLow ? -1.0 : (segment == kMid ? 0.0 : 1.5)) + rng.Normal();
    cols[0][i] = std::round(age * 10.0) / 10.0;
    cols[1][i] = std::round(income * 100.0) / 100.0;
    cols[2][i] = segment;
    cols[3][i] = rng.Bernoulli(p_yes) ? 1 : 0;
    cols[4][i] = score;
  }
  return *Dataset::Create(MixedFixtureSchema(), std::move(cols));
}

}  // namespace dptldm
