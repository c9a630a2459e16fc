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

#ifndef DPTLDM_MLP_H_
#define DPTLDM_MLP_H_

#include <cstdint>
#include <string>
#include <vector>

#include "Eigen/Core"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dptldm/random.h"

namespace dptldm {

enum class Activation { kIdentity, kRelu, kTanh };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kIdentity;

  size_t in_dim() const { return weight.cols(); }
  size_t out_dim() const { return weight.rows(); }
};

// Feed-forward network of affine layers, each followed by an activation.
// Batches are matrices with one example per row.
class Mlp {
 public:
  Mlp() = default;

  // Checks that layer dimensions chain and every parameter is finite.
  static absl::StatusOr<Mlp> Create(std::vector<DenseLayer> layers);

  // dims = {input, hidden..., output}. Hidden layers use `hidden`, the last
  // layer uses `output`. Weights are uniform in +-sqrt(6 / (fan_in +
  // fan_out)), biases zero.
  static Mlp Initialize(const std::vector<size_t>& dims, Activation hidden,
                        Activation output, Rng& rng);

  size_t input_dim() const;
  size_t output_dim() const;
  size_t NumParameters() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  absl::StatusOr<Eigen::MatrixXd> Forward(const Eigen::MatrixXd& x) const;

  bool operator==(const Mlp& other) const;

 private:
  explicit Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {}

  std::vector<DenseLayer> layers_;
};

struct LayerGrads {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

// Gradient with the shape of an Mlp's parameters. The flat order used for
// norms, noise and serialization is layer by layer, weight (row-major) then
// bias.
class ParamGrads {
 public:
  ParamGrads() = default;
  static ParamGrads ZerosLike(const Mlp& net);

  std::vector<LayerGrads>& layers() { return layers_; }
  const std::vector<LayerGrads>& layers() const { return layers_; }

  size_t size() const;
  // Global L2 norm over every entry.
  double FlatNorm() const;
  bool AllFinite() const;
  bool ShapeMatches(const Mlp& net) const;

  void Scale(double factor);
  void Add(const ParamGrads& other);

  std::vector<double> Flatten() const;
  void Unflatten(const std::vector<double>& flat);

 private:
  std::vector<LayerGrads> layers_;
};

// Activations retained by a forward pass for the matching backward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> pre_activations;
  Eigen::MatrixXd output;
};

struct BackwardResult {
  // d(mean over rows of row loss) / d(params).
  ParamGrads grads;
  // d(row loss) / d(row input), one row per example (not averaged).
  Eigen::MatrixXd input_grad;
};

absl::StatusOr<ForwardCache> ForwardWithCache(const Mlp& net,
                                              const Eigen::MatrixXd& x);

// Reverse-mode gradient of the forward map contracted with `upstream` (rows of
// d(row loss)/d(output)), averaged over the batch.
absl::StatusOr<BackwardResult> Backward(const Mlp& net,
                                        const ForwardCache& cache,
                                        const Eigen::MatrixXd& upstream);
absl::StatusOr<BackwardResult> Backward(const Mlp& net, const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& upstream);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ParamGrads first_moment;
  ParamGrads second_moment;
  int64_t step = 0;
  AdamOptions options;

  static AdamState Create(const Mlp& net, const AdamOptions& options = {});
};

// One bias-corrected Adam update in place. Rejects non-finite or mis-shaped
// gradients without touching `net` or `state`.
absl::Status AdamStep(Mlp& net, const ParamGrads& grads, AdamState& state);

// Writes <stem>.json (schema_version, dims, activations) and <stem>.bin (raw
// little-endian float64 parameters in flat order). Reload is bit-exact.
absl::Status SaveMlp(const Mlp& net, const std::string& stem);
absl::StatusOr<Mlp> LoadMlp(const std::string& stem);

}  // namespace dptldm

#endif  // DPTLDM_MLP_H_
