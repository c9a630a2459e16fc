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

// Run configuration read from a TOML file. Supported subset: top-level and
// [section] tables of key = value pairs whose values are integers, floats,
// booleans, quoted strings or flat arrays of numbers. '#' starts a comment.
//
//   seed = 7
//   [data]     train, control, schema (paths relative to the config file)
//   [train]    epochs_ae, epochs_diff, batch_ae, batch_diff, latent_dim,
//              hidden_ae, hidden_diff, diffusion_steps, lr_ae, lr_diff
//   [dp]       enabled, sigma, clip_norm, sep, release_multiplier
//   [generate] n
//   [eval]     n_targets, n_attacks, k, n_mia_targets, n_shadow_targets,
//              n_shadow, shadow_train_size, shadow_synth_size
//   [benchmark] rows, train_fraction, separations, sigma, clip_norm,
//              include_marginal, shadow_attacks, n_synth

#ifndef DPTLDM_TOOLS_RUN_CONFIG_H_
#define DPTLDM_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>

#include "absl/status/statusor.h"
#include "dptldm/attacks.h"
#include "dptldm/benchmark.h"
#include "dptldm/synthesizer.h"

namespace dptldm {

struct RunConfig {
  std::optional<uint64_t> seed;
  std::string train_csv;
  std::string control_csv;
  std::string schema_json;
  TrainConfig train;
  size_t generate_n = 0;
  PrivacySettings privacy;
  BenchmarkConfig benchmark = BenchmarkConfig::Default();
  size_t benchmark_rows = 2000;
  double benchmark_train_fraction = 0.5;
};

absl::StatusOr<RunConfig> ParseRunConfig(const std::string& text,
                                         const std::string& base_dir);
absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path);

// Command-line values that take precedence over the file.
struct FlagOverrides {
  std::optional<uint64_t> seed;
  std::optional<double> sep;
  std::optional<double> sigma;
  std::optional<double> clip_norm;
  std::optional<int64_t> epochs_ae;
  std::optional<int64_t> epochs_diff;
  std::optional<size_t> batch_ae;
  std::optional<size_t> batch_diff;
  std::optional<size_t> latent_dim;
};

// Applies to both the train and benchmark sections. --sep or --sigma turns
// DP training on; in the benchmark --sep replaces the separation list.
void ApplyOverrides(const FlagOverrides& flags, RunConfig& config);

}  // namespace dptldm

#endif  // DPTLDM_TOOLS_RUN_CONFIG_H_
