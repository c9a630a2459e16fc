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

// Two-stage latent diffusion synthesizer.
//
// Stage 1 trains the autoencoder, optionally with batch-clipped DP-SGD over
// Poisson-sampled batches. Stage 2 freezes the encoder, maps every training
// row to its posterior mean once, and trains the diffusion model on those
// latents without further noise. Nothing after the latents are computed
// reads the training rows.

#ifndef DPTLDM_SYNTHESIZER_H_
#define DPTLDM_SYNTHESIZER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "Eigen/Core"
#include "absl/status/statusor.h"
#include "dptldm/autoencoder.h"
#include "dptldm/diffusion.h"
#include "dptldm/dp_optimizer.h"
#include "dptldm/encoding.h"
#include "dptldm/fdp_accountant.h"
#include "dptldm/mlp.h"
#include "dptldm/random.h"
#include "dptldm/table.h"
#include "json.hpp"

namespace dptldm {

struct DpSettings {
  double clip_norm = 1.0;
  double noise_scale = 1.0;
  double separation_target = 0.1;
  // Gradient releases per round charged to the accountant.
  double release_multiplier = 1.0;
};

struct TrainConfig {
  int64_t epochs_ae = 100;    // E1, an upper bound under DP
  int64_t epochs_diff = 100;  // E2
  size_t batch_ae = 200;      // B1, expected size under DP
  size_t batch_diff = 200;    // B2
  AutoencoderConfig autoencoder;
  DiffusionConfig diffusion;
  AdamOptions adam_ae;
  AdamOptions adam_diff;
  std::optional<DpSettings> dp;
  uint64_t seed = 0;

  absl::Status Validate() const;
  nlohmann::json ToJson() const;
  static absl::StatusOr<TrainConfig> FromJson(const nlohmann::json& json);
};

struct Provenance {
  bool dp = false;
  std::optional<PrivacyBudget> budget;
  std::optional<AccountantReport> accountant;
  uint64_t seed = 0;
  int64_t epochs_ae_run = 0;
  int64_t rounds_ae = 0;  // optimizer steps taken in stage 1
  int64_t epochs_diff_run = 0;
  double final_loss_ae = 0.0;
  double final_loss_diff = 0.0;
};

struct TldmModel {
  Encoding encoding;
  AutoencoderModel autoencoder;
  DiffusionModel diffusion;
  TrainConfig config;
  Provenance provenance;

  const TableSchema& schema() const { return encoding.schema(); }
};

// Gatekeeper for the encoded training rows. Counts every row handed out and
// separately counts rows handed out after Seal().
class RowSource {
 public:
  explicit RowSource(Eigen::MatrixXd rows) : rows_(std::move(rows)) {}

  size_t num_rows() const { return rows_.rows(); }
  size_t width() const { return rows_.cols(); }

  Eigen::MatrixXd Rows(const std::vector<size_t>& indices);
  Eigen::MatrixXd All();

  void Seal() { sealed_ = true; }
  bool sealed() const { return sealed_; }
  int64_t rows_read() const { return rows_read_; }
  int64_t rows_read_after_seal() const { return rows_read_after_seal_; }

 private:
  void Count(size_t n);

  Eigen::MatrixXd rows_;
  bool sealed_ = false;
  int64_t rows_read_ = 0;
  int64_t rows_read_after_seal_ = 0;
};

// Error codes: FailedPrecondition when the privacy budget admits no epoch,
// Aborted when a loss or gradient stops being finite, InvalidArgument for
// bad inputs.
absl::StatusOr<TldmModel> Train(const Dataset& train_data,
                                const TrainConfig& config);
// As above on rows already encoded with `encoding`. Stage 1 draws batches
// from `rows`, then the encoder means are read once and `rows` is sealed.
absl::StatusOr<TldmModel> TrainOnRows(RowSource& rows, const Encoding& encoding,
                                      const TrainConfig& config);

absl::StatusOr<Dataset> Generate(const TldmModel& model, size_t n,
                                 const Rng& rng);

// manifest.json, autoencoder/, diffusion/.
absl::Status SaveBundle(const TldmModel& model, const std::string& dir);
absl::StatusOr<TldmModel> LoadBundle(const std::string& dir);
nlohmann::json ManifestJson(const TldmModel& model);

// Samples every column independently from its empirical distribution.
class MarginalSampler {
 public:
  static absl::StatusOr<MarginalSampler> Fit(const Dataset& data, uint64_t seed);

  const TableSchema& schema() const { return schema_; }
  uint64_t seed() const { return seed_; }

  // Column c draws from rng.Fork(c).
  Dataset Generate(size_t n, const Rng& rng) const;
  // Draws from Rng(seed).Fork("generate") with the seed given to Fit.
  Dataset Generate(size_t n) const;

 private:
  TableSchema schema_;
  std::vector<std::vector<double>> columns_;
  uint64_t seed_ = 0;
};

}  // namespace dptldm

#endif  // DPTLDM_SYNTHESIZER_H_
