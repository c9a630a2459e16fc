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

// Gaussian denoising diffusion over latent vectors.
//
// Steps are 1-indexed: t in {1, ..., T}. alpha_bar(0) is defined as 1.

#ifndef DPTLDM_DIFFUSION_H_
#define DPTLDM_DIFFUSION_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "Eigen/Core"
#include "absl/status/statusor.h"
#include "dptldm/mlp.h"
#include "dptldm/random.h"

namespace dptldm {

inline constexpr int kDefaultDiffusionSteps = 1000;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 0.02;
inline constexpr size_t kTimestepEmbeddingDim = 32;

class Schedule {
 public:
  Schedule() = default;

  // Linear betas from beta_start to beta_end. Requires
  // 0 < beta_start <= beta_end < 1 and steps >= 1.
  static absl::StatusOr<Schedule> Create(int steps, double beta_start,
                                         double beta_end);

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta_start() const { return beta_start_; }
  double beta_end() const { return beta_end_; }

  double beta(int t) const { return beta_[t - 1]; }
  double alpha(int t) const { return alpha_[t - 1]; }
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_[t - 1]; }
  // beta(t) (1 - alpha_bar(t - 1)) / (1 - alpha_bar(t)).
  double posterior_variance(int t) const { return posterior_variance_[t - 1]; }

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

  bool operator==(const Schedule&) const = default;

 private:
  double beta_start_ = 0.0;
  double beta_end_ = 0.0;
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
  std::vector<double> posterior_variance_;
};

struct DiffusionConfig {
  int steps = kDefaultDiffusionSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;
  std::vector<size_t> hidden = {256, 256, 256};
};

// eps_net maps [z_t, embedding(t)] to predicted noise of width latent_dim.
class DiffusionModel {
 public:
  DiffusionModel() = default;

  static absl::StatusOr<DiffusionModel> Create(Mlp eps_net, Schedule schedule);
  static absl::StatusOr<DiffusionModel> Initialize(size_t latent_dim,
                                                   const DiffusionConfig& config,
                                                   Rng& rng);

  const Mlp& eps_net() const { return eps_net_; }
  Mlp& mutable_eps_net() { return eps_net_; }
  const Schedule& schedule() const { return schedule_; }
  size_t latent_dim() const { return eps_net_.output_dim(); }

  bool operator==(const DiffusionModel&) const = default;

 private:
  DiffusionModel(Mlp eps_net, Schedule schedule)
      : eps_net_(std::move(eps_net)), schedule_(std::move(schedule)) {}

  Mlp eps_net_;
  Schedule schedule_;
};

// [sin(t w_0), ..., sin(t w_{k-1}), cos(t w_0), ..., cos(t w_{k-1})] with
// w_j = 10000^{-j / k}, k = dim / 2.
Eigen::VectorXd TimestepEmbedding(int t, size_t dim = kTimestepEmbeddingDim);

// Row r of the result is [z.row(r), TimestepEmbedding(steps[r])].
Eigen::MatrixXd EpsNetInput(const Eigen::MatrixXd& z,
                            const std::vector<int>& steps);

// sqrt(alpha_bar(t)) z0 + sqrt(1 - alpha_bar(t)) eta.
absl::StatusOr<Eigen::MatrixXd> ForwardSample(const Eigen::MatrixXd& z0, int t,
                                              const Eigen::MatrixXd& eta,
                                              const Schedule& schedule);

// Predicts noise for each row of z_t at its own step.
using NoisePredictor = std::function<absl::StatusOr<Eigen::MatrixXd>(
    const Eigen::MatrixXd& z_t, const std::vector<int>& steps)>;

NoisePredictor ModelPredictor(const DiffusionModel& model);

struct DiffusionLossResult {
  // Mean over rows of ||eps - eps_theta(z_t, t)||^2.
  double loss = 0.0;
  ParamGrads grads;  // empty unless requested
};

// Loss for explicit per-row steps and noise; z_t is formed by ForwardSample.
absl::StatusOr<double> DiffusionLossWithPredictor(const NoisePredictor& predictor,
                                                  const Schedule& schedule,
                                                  const Eigen::MatrixXd& z0,
                                                  const std::vector<int>& steps,
                                                  const Eigen::MatrixXd& eps);

absl::StatusOr<DiffusionLossResult> DiffusionLossWithNoise(
    const DiffusionModel& model, const Eigen::MatrixXd& z0,
    const std::vector<int>& steps, const Eigen::MatrixXd& eps,
    bool compute_gradients = true);

// Draws t uniform on {1, ..., T} and eps ~ N(0, I) per row.
absl::StatusOr<DiffusionLossResult> DiffusionLoss(const DiffusionModel& model,
                                                  const Eigen::MatrixXd& z0,
                                                  Rng& rng,
                                                  bool compute_gradients = true);

// One ancestral step z_t -> z_{t-1} with the given standard-normal draws
// (ignored when t = 1).
absl::StatusOr<Eigen::MatrixXd> DenoiseStepWithNoise(
    const NoisePredictor& predictor, const Schedule& schedule,
    const Eigen::MatrixXd& z_t, int t, const Eigen::MatrixXd& eta);

absl::StatusOr<Eigen::MatrixXd> DenoiseStep(const DiffusionModel& model,
                                            const Eigen::MatrixXd& z_t, int t,
                                            Rng& rng);

// Runs the reverse chain from z_T ~ N(0, I). Row r draws all of its noise
// from rng.Fork(r), so its noise does not depend on n.
absl::StatusOr<Eigen::MatrixXd> SampleLatents(const DiffusionModel& model,
                                              size_t n, const Rng& rng);

// dir/schedule.json and dir/eps_net.{json,bin}.
absl::Status SaveDiffusion(const DiffusionModel& model, const std::string& dir);
absl::StatusOr<DiffusionModel> LoadDiffusion(const std::string& dir);

}  // namespace dptldm

#endif  // DPTLDM_DIFFUSION_H_
