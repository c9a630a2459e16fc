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

#ifndef DPTLDM_AUTOENCODER_H_
#define DPTLDM_AUTOENCODER_H_

#include <string>
#include <vector>

#include "Eigen/Core"
#include "absl/status/statusor.h"
#include "dptldm/encoding.h"
#include "dptldm/mlp.h"
#include "dptldm/random.h"

namespace dptldm {

// Log-variances (posterior and Gaussian heads) are clamped to this range.
inline constexpr double kMinLogVariance = -10.0;
inline constexpr double kMaxLogVariance = 10.0;

// Where one schema column lives in the encoded input row and in the decoder
// output. A continuous column reads one input coordinate and owns two outputs
// (mean, log-variance); a categorical column reads its one-hot block and owns
// one logit per category.
struct HeadSpec {
  ColumnKind kind = ColumnKind::kContinuous;
  size_t input_offset = 0;
  size_t input_width = 0;
  size_t output_offset = 0;
  size_t output_width = 0;

  bool operator==(const HeadSpec&) const = default;
};

class HeadLayout {
 public:
  HeadLayout() = default;
  static HeadLayout FromEncoding(const Encoding& encoding);

  const std::vector<HeadSpec>& heads() const { return heads_; }
  size_t input_width() const { return input_width_; }
  size_t output_width() const { return output_width_; }

  nlohmann::json ToJson() const;
  static absl::StatusOr<HeadLayout> FromJson(const nlohmann::json& json);

  bool operator==(const HeadLayout&) const = default;

 private:
  std::vector<HeadSpec> heads_;
  size_t input_width_ = 0;
  size_t output_width_ = 0;
};

// max(2, ceil(encoded_width / 4)).
size_t DefaultLatentDim(size_t encoded_width);

struct AutoencoderConfig {
  size_t latent_dim = 0;  // 0 selects DefaultLatentDim
  std::vector<size_t> hidden = {256, 256, 256};
};

// Encoder maps an encoded row to (posterior mean, posterior log-variance);
// the decoder maps a latent vector to the concatenated head parameters.
class AutoencoderModel {
 public:
  AutoencoderModel() = default;

  static absl::StatusOr<AutoencoderModel> Create(Mlp encoder, Mlp decoder,
                                                 HeadLayout heads);
  static AutoencoderModel Initialize(const Encoding& encoding,
                                     const AutoencoderConfig& config, Rng& rng);

  const Mlp& encoder() const { return encoder_; }
  const Mlp& decoder() const { return decoder_; }
  Mlp& mutable_encoder() { return encoder_; }
  Mlp& mutable_decoder() { return decoder_; }
  const HeadLayout& heads() const { return heads_; }
  size_t latent_dim() const { return decoder_.input_dim(); }
  size_t input_dim() const { return encoder_.input_dim(); }

  bool operator==(const AutoencoderModel&) const = default;

 private:
  AutoencoderModel(Mlp encoder, Mlp decoder, HeadLayout heads)
      : encoder_(std::move(encoder)),
        decoder_(std::move(decoder)),
        heads_(std::move(heads)) {}

  Mlp encoder_;
  Mlp decoder_;
  HeadLayout heads_;
};

struct LatentPosterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_variance;
};

// Posterior parameters for a batch, one row per example.
struct LatentBatch {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd log_variance;
};

struct HeadOutput {
  ColumnKind kind = ColumnKind::kContinuous;
  double mean = 0.0;          // continuous
  double log_variance = 0.0;  // continuous
  Eigen::VectorXd probabilities;  // categorical, sums to 1
};

struct DistributionHeads {
  std::vector<HeadOutput> columns;  // schema order
};

absl::StatusOr<LatentPosterior> EncodeRow(const AutoencoderModel& model,
                                          const Eigen::VectorXd& x);
absl::StatusOr<LatentBatch> EncodeBatch(const AutoencoderModel& model,
                                        const Eigen::MatrixXd& x);

// z = mean + exp(log_variance / 2) * eta, eta ~ N(0, I).
Eigen::VectorXd SampleLatent(const LatentPosterior& posterior, Rng& rng);

absl::StatusOr<DistributionHeads> DecodeLatent(const AutoencoderModel& model,
                                               const Eigen::VectorXd& z);

// KL(N(mean, diag(exp(log_variance))) || N(0, I)).
double KlStdNormal(const LatentPosterior& posterior);

struct ElboResult {
  double loss = 0.0;  // batch mean of reconstruction + kl
  double reconstruction = 0.0;
  double kl = 0.0;
  ParamGrads encoder_grads;
  ParamGrads decoder_grads;
};

// Negative ELBO with one reparameterized latent sample per row, using the
// given standard-normal draws (rows x latent_dim). Gradients are averaged
// over the batch.
absl::StatusOr<ElboResult> ElboWithNoise(const AutoencoderModel& model,
                                         const Eigen::MatrixXd& x,
                                         const Eigen::MatrixXd& noise,
                                         bool compute_gradients = true);
absl::StatusOr<ElboResult> ElboLossAndGradients(const AutoencoderModel& model,
                                                const Eigen::MatrixXd& x,
                                                Rng& rng);
absl::StatusOr<double> ElboLoss(const AutoencoderModel& model,
                                const Eigen::MatrixXd& x, Rng& rng);

// Maps decoder outputs for a batch of latents to encoded rows: continuous
// coordinates take the head mean, categorical blocks become the one-hot argmax
// (ties to the lowest index).
absl::StatusOr<Eigen::MatrixXd> DecodeToEncoded(const AutoencoderModel& model,
                                                const Eigen::MatrixXd& z);

// Deterministic reconstruction through the posterior mean.
absl::StatusOr<Eigen::MatrixXd> Reconstruct(const AutoencoderModel& model,
                                            const Eigen::MatrixXd& x);

// dir/encoder.{json,bin}, dir/decoder.{json,bin}, dir/heads.json.
absl::Status SaveAutoencoder(const AutoencoderModel& model,
                             const std::string& dir);
absl::StatusOr<AutoencoderModel> LoadAutoencoder(const std::string& dir);

}  // namespace dptldm

#endif  // DPTLDM_AUTOENCODER_H_
