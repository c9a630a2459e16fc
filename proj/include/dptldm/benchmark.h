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

// Risk-utility comparison of the non-private synthesizer, its DP variants
// at several separation targets and the independent-marginal baseline.
//
// Every cell derives its randomness from the master seed through
// Fork(cell name), then the named substreams train, generate, attack and
// metric. Cells share nothing, so running them on several threads leaves
// every number unchanged.

#ifndef DPTLDM_BENCHMARK_H_
#define DPTLDM_BENCHMARK_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dptldm/attacks.h"
#include "dptldm/quality.h"
#include "dptldm/synthesizer.h"
#include "dptldm/table.h"
#include "json.hpp"

namespace dptldm {

struct BenchmarkConfig {
  uint64_t seed = 0;
  TrainConfig train;  // dp ignored; set per cell
  double clip_norm = 1.0;
  double sigma = 5.0;
  std::vector<double> separations = {0.1, 0.15, 0.2};
  bool include_marginal = true;
  // Rows generated per synthesizer; 0 means |train|.
  size_t n_synth = 0;
  PrivacySettings privacy;
  // Reduced synthesizer used for shadow models. Under DP its batch size is
  // scaled so the sampling rate matches the attacked model.
  TrainConfig shadow_train;
  bool shadow_attacks = true;
  int threads = 1;

  // Sizes suited to a 2000-row table on one core.
  static BenchmarkConfig Default();
  nlohmann::json ToJson() const;
};

struct BenchmarkRow {
  std::string model;  // "TLDM", "DP-TLDM" or "Marginal"
  std::optional<double> separation;
  QualityReport quality;
  PrivacyReport privacy;
  std::optional<AccountantReport> accountant;
  int64_t epochs_ae_run = 0;

  // Mean of resemblance, discriminability and utility.
  double QualityScore() const;
  nlohmann::json ToJson() const;
};

absl::StatusOr<std::vector<BenchmarkRow>> RunBenchmark(const Dataset& train,
                                                       const Dataset& control,
                                                       const BenchmarkConfig& config);

// Header Resem,Discri,Utility,S-out,Link,AIA,MIA.
std::string SummaryHeader();
std::string SummaryValues(const QualityReport& quality, const PrivacyReport& privacy);
// Model,Sep, then the summary columns; one line per row.
std::string BenchmarkCsv(const std::vector<BenchmarkRow>& rows);

}  // namespace dptldm

#endif  // DPTLDM_BENCHMARK_H_
