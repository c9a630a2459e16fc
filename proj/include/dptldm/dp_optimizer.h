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

#ifndef DPTLDM_DP_OPTIMIZER_H_
#define DPTLDM_DP_OPTIMIZER_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "Eigen/Core"
#include "absl/status/statusor.h"
#include "dptldm/autoencoder.h"
#include "dptldm/mlp.h"
#include "dptldm/random.h"

namespace dptldm {

// Batch-clipping DP-SGD parameters: the clipped mini-batch mean gradient
// receives N(0, (clip_norm * noise_scale)^2 I) noise.
struct DpConfig {
  double clip_norm = 1.0;
  double noise_scale = 1.0;
  // Poisson inclusion probability b / N.
  double sampling_rate = 0.01;
  int64_t epochs = 1;

  absl::Status Validate() const;
};

struct NoisyGradient {
  ParamGrads values;
  double pre_clip_norm = 0.0;
  bool was_clipped = false;
};

// g / max(1, ||g||_2 / clip_norm), with the norm taken over all parameters.
absl::StatusOr<ParamGrads> ClipBatchGradient(const ParamGrads& mean_gradient,
                                             double clip_norm);

// Adds i.i.d. N(0, (clip_norm * noise_scale)^2) to every coordinate, drawing
// in the flat parameter order.
NoisyGradient AddNoise(const ParamGrads& clipped, double clip_norm,
                       double noise_scale, Rng& rng);

// Each index in [0, n) is kept independently with probability `rate`.
std::vector<size_t> PoissonSample(size_t n, double rate, Rng& rng);

// ceil(1 / rate): Poisson draws per epoch.
int64_t RoundsPerEpoch(double rate);

// R = (N / b) * E.
double TotalRounds(double n, double expected_batch, double epochs);

// Batch-mean gradient of a loss for one network.
using GradientFn = std::function<absl::StatusOr<ParamGrads>(
    const Mlp& net, const Eigen::MatrixXd& batch)>;

// Computes the batch-mean gradient, clips it to clip_norm, then adds noise.
absl::StatusOr<NoisyGradient> DpGradientStep(const Mlp& net,
                                             const Eigen::MatrixXd& batch,
                                             const GradientFn& loss_gradient,
                                             const DpConfig& config, Rng& rng);

struct DpAutoencoderGradients {
  double loss = 0.0;
  NoisyGradient encoder;
  NoisyGradient decoder;
};

// One privatized ELBO round: encoder and decoder gradients are each clipped
// to clip_norm and noised independently.
absl::StatusOr<DpAutoencoderGradients> DpAutoencoderStep(
    const AutoencoderModel& model, const Eigen::MatrixXd& batch,
    const DpConfig& config, Rng& rng);

}  // namespace dptldm

#endif  // DPTLDM_DP_OPTIMIZER_H_
