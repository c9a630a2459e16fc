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

#include "dptldm/diffusion.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptldm/status_macros.h"
#include "json.hpp"

namespace dptldm {
namespace {

absl::Status CheckStep(const Schedule& schedule, int t) {
  if (t < 1 || t > schedule.steps()) {
    return absl::OutOfRangeError(
        absl::StrCat("diffusion step ", t, " outside [1, ", schedule.steps(), "]"));
  }
  return absl::OkStatus();
}

Eigen::MatrixXd NormalMatrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.Normal();
  }
  return m;
}

absl::StatusOr<Eigen::MatrixXd> ForwardSamplePerRow(
    const Eigen::MatrixXd& z0, const std::vector<int>& steps,
    const Eigen::MatrixXd& eps, const Schedule& schedule) {
  if (static_cast<Eigen::Index>(steps.size()) != z0.rows() ||
      eps.rows() != z0.rows() || eps.cols() != z0.cols()) {
    return absl::InvalidArgumentError("diffusion loss: shape mismatch");
  }
  Eigen::MatrixXd z_t(z0.rows(), z0.cols());
  for (Eigen::Index r = 0; r < z0.rows(); ++r) {
    RETURN_IF_ERROR(CheckStep(schedule, steps[r]));
    const double ab = schedule.alpha_bar(steps[r]);
    z_t.row(r) = std::sqrt(ab) * z0.row(r) + std::sqrt(1.0 - ab) * eps.row(r);
  }
  return z_t;
}

}  // namespace

absl::StatusOr<Schedule> Schedule::Create(int steps, double beta_start,
                                          double beta_end) {
  if (steps < 1) return absl::InvalidArgumentError("schedule: need T >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    return absl::InvalidArgumentError(
        "schedule: need 0 < beta_start <= beta_end < 1");
  }
  Schedule s;
  s.beta_start_ = beta_start;
  s.beta_end_ = beta_end;
  s.beta_.resize(steps);
  s.alpha_.resize(steps);
  s.alpha_bar_.resize(steps);
  s.posterior_variance_.resize(steps);
  long double product = 1.0L;
  for (int i = 0; i < steps; ++i) {
    const double beta =
        steps == 1 ? beta_start
                   : beta_start + (beta_end - beta_start) * i / (steps - 1);
    s.beta_[i] = beta;
    s.alpha_[i] = 1.0 - beta;
    const long double previous = product;
    product *= static_cast<long double>(s.alpha_[i]);
    s.alpha_bar_[i] = static_cast<double>(product);
    s.posterior_variance_[i] = static_cast<double>(
        beta * (1.0L - previous) / (1.0L - product));
  }
  return s;
}

absl::StatusOr<DiffusionModel> DiffusionModel::Create(Mlp eps_net,
                                                      Schedule schedule) {
  if (schedule.steps() < 1) return absl::InvalidArgumentError("empty schedule");
  if (eps_net.input_dim() != eps_net.output_dim() + kTimestepEmbeddingDim) {
    return absl::InvalidArgumentError(absl::StrCat(
        "eps_net input width ", eps_net.input_dim(), " != latent width ",
        eps_net.output_dim(), " + ", kTimestepEmbeddingDim));
  }
  return DiffusionModel(std::move(eps_net), std::move(schedule));
}

absl::StatusOr<DiffusionModel> DiffusionModel::Initialize(
    size_t latent_dim, const DiffusionConfig& config, Rng& rng) {
  if (latent_dim == 0) return absl::InvalidArgumentError("latent_dim must be >= 1");
  ASSIGN_OR_RETURN(Schedule schedule, Schedule::Create(config.steps,
                                                       config.beta_start,
                                                       config.beta_end));
  std::vector<size_t> dims = {latent_dim + kTimestepEmbeddingDim};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(latent_dim);
  Mlp net = Mlp::Initialize(dims, Activation::kRelu, Activation::kIdentity, rng);
  return DiffusionModel(std::move(net), std::move(schedule));
}

Eigen::VectorXd TimestepEmbedding(int t, size_t dim) {
  const size_t half = dim / 2;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  for (size_t j = 0; j < half; ++j) {
    const double w = std::pow(10000.0, -static_cast<double>(j) / half);
    e(j) = std::sin(t * w);
    e(half + j) = std::cos(t * w);
  }
  return e;
}

Eigen::MatrixXd EpsNetInput(const Eigen::MatrixXd& z,
                            const std::vector<int>& steps) {
  Eigen::MatrixXd input(z.rows(), z.cols() + kTimestepEmbeddingDim);
  input.leftCols(z.cols()) = z;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    input.row(r).tail(kTimestepEmbeddingDim) =
        TimestepEmbedding(steps[r]).transpose();
  }
  return input;
}

absl::StatusOr<Eigen::MatrixXd> ForwardSample(const Eigen::MatrixXd& z0, int t,
                                              const Eigen::MatrixXd& eta,
                                              const Schedule& schedule) {
  RETURN_IF_ERROR(CheckStep(schedule, t));
  if (eta.rows() != z0.rows() || eta.cols() != z0.cols()) {
    return absl::InvalidArgumentError("forward sample: shape mismatch");
  }
  const double ab = schedule.alpha_bar(t);
  return (std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * eta).eval();
}

NoisePredictor ModelPredictor(const DiffusionModel& model) {
  return [&model](const Eigen::MatrixXd& z_t,
                  const std::vector<int>& steps) -> absl::StatusOr<Eigen::MatrixXd> {
    if (z_t.cols() != static_cast<Eigen::Index>(model.latent_dim()) ||
        static_cast<Eigen::Index>(steps.size()) != z_t.rows()) {
      return absl::InvalidArgumentError("eps_net: shape mismatch");
    }
    return model.eps_net().Forward(EpsNetInput(z_t, steps));
  };
}

absl::StatusOr<double> DiffusionLossWithPredictor(const NoisePredictor& predictor,
                                                  const Schedule& schedule,
                                                  const Eigen::MatrixXd& z0,
                                                  const std::vector<int>& steps,
                                                  const Eigen::MatrixXd& eps) {
  if (z0.rows() == 0) return absl::InvalidArgumentError("diffusion loss: empty batch");
  ASSIGN_OR_RETURN(Eigen::MatrixXd z_t,
                   ForwardSamplePerRow(z0, steps, eps, schedule));
  ASSIGN_OR_RETURN(Eigen::MatrixXd predicted, predictor(z_t, steps));
  const double loss = (predicted - eps).squaredNorm() / z0.rows();
  if (!std::isfinite(loss)) return absl::InternalError("diffusion loss is not finite");
  return loss;
}

absl::StatusOr<DiffusionLossResult> DiffusionLossWithNoise(
    const DiffusionModel& model, const Eigen::MatrixXd& z0,
    const std::vector<int>& steps, const Eigen::MatrixXd& eps,
    bool compute_gradients) {
  if (z0.rows() == 0) return absl::InvalidArgumentError("diffusion loss: empty batch");
  if (z0.cols() != static_cast<Eigen::Index>(model.latent_dim())) {
    return absl::InvalidArgumentError("diffusion loss: latent width mismatch");
  }
  ASSIGN_OR_RETURN(Eigen::MatrixXd z_t,
                   ForwardSamplePerRow(z0, steps, eps, model.schedule()));
  ASSIGN_OR_RETURN(ForwardCache cache,
                   ForwardWithCache(model.eps_net(), EpsNetInput(z_t, steps)));
  const Eigen::MatrixXd residual = cache.output - eps;
  DiffusionLossResult result;
  result.loss = residual.squaredNorm() / z0.rows();
  if (!std::isfinite(result.loss)) {
    return absl::InternalError("diffusion loss is not finite");
  }
  if (compute_gradients) {
    ASSIGN_OR_RETURN(BackwardResult back,
                     Backward(model.eps_net(), cache, 2.0 * residual));
    result.grads = std::move(back.grads);
  }
  return result;
}

absl::StatusOr<DiffusionLossResult> DiffusionLoss(const DiffusionModel& model,
                                                  const Eigen::MatrixXd& z0,
                                                  Rng& rng,
                                                  bool compute_gradients) {
  std::vector<int> steps(z0.rows());
  for (int& t : steps) {
    t = 1 + static_cast<int>(rng.UniformInt(model.schedule().steps()));
  }
  const Eigen::MatrixXd eps = NormalMatrix(z0.rows(), z0.cols(), rng);
  return DiffusionLossWithNoise(model, z0, steps, eps, compute_gradients);
}

absl::StatusOr<Eigen::MatrixXd> DenoiseStepWithNoise(
    const NoisePredictor& predictor, const Schedule& schedule,
    const Eigen::MatrixXd& z_t, int t, const Eigen::MatrixXd& eta) {
  RETURN_IF_ERROR(CheckStep(schedule, t));
  ASSIGN_OR_RETURN(Eigen::MatrixXd predicted,
                   predictor(z_t, std::vector<int>(z_t.rows(), t)));
  if (predicted.rows() != z_t.rows() || predicted.cols() != z_t.cols()) {
    return absl::InternalError("noise prediction has the wrong shape");
  }
  const double coef = schedule.beta(t) / std::sqrt(1.0 - schedule.alpha_bar(t));
  Eigen::MatrixXd out = (z_t - coef * predicted) / std::sqrt(schedule.alpha(t));
  if (t > 1) {
    if (eta.rows() != z_t.rows() || eta.cols() != z_t.cols()) {
      return absl::InvalidArgumentError("denoise step: noise shape mismatch");
    }
    out += std::sqrt(schedule.posterior_variance(t)) * eta;
  }
  return out;
}

absl::StatusOr<Eigen::MatrixXd> DenoiseStep(const DiffusionModel& model,
                                            const Eigen::MatrixXd& z_t, int t,
                                            Rng& rng) {
  Eigen::MatrixXd eta;
  if (t > 1) eta = NormalMatrix(z_t.rows(), z_t.cols(), rng);
  return DenoiseStepWithNoise(ModelPredictor(model), model.schedule(), z_t, t,
                              eta);
}

absl::StatusOr<Eigen::MatrixXd> SampleLatents(const DiffusionModel& model,
                                              size_t n, const Rng& rng) {
  const Eigen::Index d = model.latent_dim();
  const Eigen::Index rows = static_cast<Eigen::Index>(n);
  std::vector<Rng> row_rngs;
  row_rngs.reserve(n);
  for (size_t r = 0; r < n; ++r) row_rngs.push_back(rng.Fork(uint64_t{r}));
  Eigen::MatrixXd z(rows, d);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index j = 0; j < d; ++j) z(r, j) = row_rngs[r].Normal();
  }
  if (n == 0) return z;
  const NoisePredictor predictor = ModelPredictor(model);
  Eigen::MatrixXd eta(rows, d);
  for (int t = model.schedule().steps(); t >= 1; --t) {
    if (t > 1) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index j = 0; j < d; ++j) eta(r, j) = row_rngs[r].Normal();
      }
    }
    ASSIGN_OR_RETURN(z, DenoiseStepWithNoise(predictor, model.schedule(), z, t, eta));
  }
  if (!z.allFinite()) return absl::InternalError("sampled latents are not finite");
  return z;
}

absl::Status SaveDiffusion(const DiffusionModel& model, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return absl::PermissionDeniedError(absl::StrCat("cannot create ", dir));
  RETURN_IF_ERROR(SaveMlp(model.eps_net(), dir + "/eps_net"));
  const Schedule& s = model.schedule();
  const nlohmann::json json = {{"schema_version", 1},
                               {"steps", s.steps()},
                               {"beta_start", s.beta_start()},
                               {"beta_end", s.beta_end()},
                               {"timestep_embedding_dim", kTimestepEmbeddingDim}};
  std::ofstream out(dir + "/schedule.json");
  if (!out) return absl::PermissionDeniedError("cannot write schedule.json");
  out << json.dump(2) << "\n";
  return out ? absl::OkStatus() : absl::DataLossError("short write: schedule.json");
}

absl::StatusOr<DiffusionModel> LoadDiffusion(const std::string& dir) {
  std::ifstream in(dir + "/schedule.json");
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", dir, "/schedule.json"));
  const nlohmann::json json = nlohmann::json::parse(in, nullptr, false);
  if (json.is_discarded() || !json.is_object()) {
    return absl::InvalidArgumentError("malformed schedule.json");
  }
  int steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  try {
    if (json.at("timestep_embedding_dim").get<size_t>() != kTimestepEmbeddingDim) {
      return absl::InvalidArgumentError("unsupported timestep embedding width");
    }
    steps = json.at("steps").get<int>();
    beta_start = json.at("beta_start").get<double>();
    beta_end = json.at("beta_end").get<double>();
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("schedule.json: ", e.what()));
  }
  ASSIGN_OR_RETURN(Schedule schedule, Schedule::Create(steps, beta_start, beta_end));
  ASSIGN_OR_RETURN(Mlp net, LoadMlp(dir + "/eps_net"));
  return DiffusionModel::Create(std::move(net), std::move(schedule));
}

}  // namespace dptldm
