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

#include "dptldm/dp_optimizer.h"

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptldm/status_macros.h"

namespace dptldm {
namespace {

absl::StatusOr<NoisyGradient> ClipAndNoise(const ParamGrads& mean_gradient,
                                           const DpConfig& config, Rng& rng) {
  const double norm = mean_gradient.FlatNorm();
  ASSIGN_OR_RETURN(ParamGrads clipped,
                   ClipBatchGradient(mean_gradient, config.clip_norm));
  NoisyGradient noisy =
      AddNoise(clipped, config.clip_norm, config.noise_scale, rng);
  noisy.pre_clip_norm = norm;
  noisy.was_clipped = norm > config.clip_norm;
  return noisy;
}

}  // namespace

absl::Status DpConfig::Validate() const {
  if (!(clip_norm > 0.0) || !std::isfinite(clip_norm)) {
    return absl::InvalidArgumentError("dp: clip norm must be positive");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    return absl::InvalidArgumentError("dp: noise scale must be nonnegative");
  }
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) {
    return absl::InvalidArgumentError("dp: sampling rate must lie in (0, 1]");
  }
  if (epochs < 0) return absl::InvalidArgumentError("dp: negative epochs");
  return absl::OkStatus();
}

absl::StatusOr<ParamGrads> ClipBatchGradient(const ParamGrads& mean_gradient,
                                             double clip_norm) {
  if (!mean_gradient.AllFinite()) {
    return absl::InvalidArgumentError("clip: non-finite gradient");
  }
  if (!(clip_norm > 0.0)) {
    return absl::InvalidArgumentError("clip: clip norm must be positive");
  }
  ParamGrads clipped = mean_gradient;
  const double scale = std::max(1.0, mean_gradient.FlatNorm() / clip_norm);
  if (scale > 1.0) clipped.Scale(1.0 / scale);
  return clipped;
}

NoisyGradient AddNoise(const ParamGrads& clipped, double clip_norm,
                       double noise_scale, Rng& rng) {
  NoisyGradient noisy;
  noisy.values = clipped;
  noisy.pre_clip_norm = clipped.FlatNorm();
  const double stddev = clip_norm * noise_scale;
  if (stddev == 0.0) return noisy;
  for (LayerGrads& layer : noisy.values.layers()) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        layer.weight(i, j) += stddev * rng.Normal();
      }
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      layer.bias(i) += stddev * rng.Normal();
    }
  }
  return noisy;
}

std::vector<size_t> PoissonSample(size_t n, double rate, Rng& rng) {
  std::vector<size_t> batch;
  if (rate >= 1.0) {
    batch.resize(n);
    for (size_t i = 0; i < n; ++i) batch[i] = i;
    return batch;
  }
  for (size_t i = 0; i < n; ++i) {
    if (rng.Bernoulli(rate)) batch.push_back(i);
  }
  return batch;
}

int64_t RoundsPerEpoch(double rate) {
  return static_cast<int64_t>(std::ceil(1.0 / rate - 1e-12));
}

double TotalRounds(double n, double expected_batch, double epochs) {
  return n / expected_batch * epochs;
}

absl::StatusOr<NoisyGradient> DpGradientStep(const Mlp& net,
                                             const Eigen::MatrixXd& batch,
                                             const GradientFn& loss_gradient,
                                             const DpConfig& config, Rng& rng) {
  RETURN_IF_ERROR(config.Validate());
  if (batch.rows() == 0) return absl::InvalidArgumentError("dp step: empty batch");
  ASSIGN_OR_RETURN(ParamGrads mean_gradient, loss_gradient(net, batch));
  if (!mean_gradient.AllFinite()) {
    return absl::InternalError("dp step: non-finite gradient");
  }
  return ClipAndNoise(mean_gradient, config, rng);
}

absl::StatusOr<DpAutoencoderGradients> DpAutoencoderStep(
    const AutoencoderModel& model, const Eigen::MatrixXd& batch,
    const DpConfig& config, Rng& rng) {
  RETURN_IF_ERROR(config.Validate());
  if (batch.rows() == 0) return absl::InvalidArgumentError("dp step: empty batch");
  ASSIGN_OR_RETURN(ElboResult elbo, ElboLossAndGradients(model, batch, rng));
  if (!elbo.encoder_grads.AllFinite() || !elbo.decoder_grads.AllFinite()) {
    return absl::InternalError("dp step: non-finite gradient");
  }
  DpAutoencoderGradients out;
  out.loss = elbo.loss;
  ASSIGN_OR_RETURN(out.encoder, ClipAndNoise(elbo.encoder_grads, config, rng));
  ASSIGN_OR_RETURN(out.decoder, ClipAndNoise(elbo.decoder_grads, config, rng));
  return out;
}

}  // namespace dptldm
