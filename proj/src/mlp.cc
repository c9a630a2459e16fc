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

#include "dptldm/mlp.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "absl/strings/str_cat.h"
#include "dptldm/status_macros.h"
#include "json.hpp"

namespace dptldm {
namespace {

constexpr int kCheckpointVersion = 1;

Eigen::MatrixXd Apply(Activation activation, const Eigen::MatrixXd& pre) {
  switch (activation) {
    case Activation::kIdentity:
      return pre;
    case Activation::kRelu:
      return pre.cwiseMax(0.0);
    case Activation::kTanh:
      return pre.array().tanh().matrix();
  }
  return pre;
}

// Multiplies `grad` (d loss / d activation output) by the activation's
// derivative at `pre`.
void ApplyDerivative(Activation activation, const Eigen::MatrixXd& pre,
                     Eigen::MatrixXd& grad) {
  switch (activation) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      grad = (pre.array() > 0.0).select(grad, 0.0);
      return;
    case Activation::kTanh:
      grad.array() *= 1.0 - pre.array().tanh().square();
      return;
  }
}

const char* ActivationName(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
  }
  return "identity";
}

absl::StatusOr<Activation> ParseActivation(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  return absl::InvalidArgumentError(absl::StrCat("unknown activation ", name));
}

template <typename Fn>
void ForEachParam(const std::vector<DenseLayer>& layers, Fn&& fn) {
  for (const DenseLayer& layer : layers) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        fn(layer.weight(i, j));
      }
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) fn(layer.bias(i));
  }
}

}  // namespace

absl::StatusOr<Mlp> Mlp::Create(std::vector<DenseLayer> layers) {
  if (layers.empty()) return absl::InvalidArgumentError("mlp: no layers");
  for (size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& layer = layers[i];
    if (layer.bias.size() != layer.weight.rows()) {
      return absl::InvalidArgumentError(
          absl::StrCat("mlp: layer ", i, " bias does not match weight rows"));
    }
    if (i > 0 && layer.in_dim() != layers[i - 1].out_dim()) {
      return absl::InvalidArgumentError(
          absl::StrCat("mlp: layer ", i, " input does not chain"));
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      return absl::InvalidArgumentError(
          absl::StrCat("mlp: layer ", i, " has non-finite parameters"));
    }
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::Initialize(const std::vector<size_t>& dims, Activation hidden,
                    Activation output, Rng& rng) {
  std::vector<DenseLayer> layers;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    const size_t in = dims[i];
    const size_t out = dims[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer;
    layer.weight.resize(out, in);
    for (size_t r = 0; r < out; ++r) {
      for (size_t c = 0; c < in; ++c) {
        layer.weight(r, c) = (2.0 * rng.Uniform() - 1.0) * limit;
      }
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.activation = i + 2 == dims.size() ? output : hidden;
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

size_t Mlp::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().in_dim();
}

size_t Mlp::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().out_dim();
}

size_t Mlp::NumParameters() const {
  size_t n = 0;
  for (const DenseLayer& layer : layers_) {
    n += layer.weight.size() + layer.bias.size();
  }
  return n;
}

absl::StatusOr<Eigen::MatrixXd> Mlp::Forward(const Eigen::MatrixXd& x) const {
  ASSIGN_OR_RETURN(ForwardCache cache, ForwardWithCache(*this, x));
  return std::move(cache.output);
}

bool Mlp::operator==(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& a = layers_[i];
    const DenseLayer& b = other.layers_[i];
    if (a.activation != b.activation || a.weight.rows() != b.weight.rows() ||
        a.weight.cols() != b.weight.cols() || a.weight != b.weight ||
        a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

ParamGrads ParamGrads::ZerosLike(const Mlp& net) {
  ParamGrads g;
  for (const DenseLayer& layer : net.layers()) {
    g.layers_.push_back(
        {Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
         Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return g;
}

size_t ParamGrads::size() const {
  size_t n = 0;
  for (const LayerGrads& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

double ParamGrads::FlatNorm() const {
  double ss = 0.0;
  for (const LayerGrads& l : layers_) {
    ss += l.weight.squaredNorm() + l.bias.squaredNorm();
  }
  return std::sqrt(ss);
}

bool ParamGrads::AllFinite() const {
  for (const LayerGrads& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool ParamGrads::ShapeMatches(const Mlp& net) const {
  if (layers_.size() != net.layers().size()) return false;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& layer = net.layers()[i];
    if (layers_[i].weight.rows() != layer.weight.rows() ||
        layers_[i].weight.cols() != layer.weight.cols() ||
        layers_[i].bias.size() != layer.bias.size()) {
      return false;
    }
  }
  return true;
}

void ParamGrads::Scale(double factor) {
  for (LayerGrads& l : layers_) {
    l.weight *= factor;
    l.bias *= factor;
  }
}

void ParamGrads::Add(const ParamGrads& other) {
  for (size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight += other.layers_[i].weight;
    layers_[i].bias += other.layers_[i].bias;
  }
}

std::vector<double> ParamGrads::Flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const LayerGrads& l : layers_) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) {
        flat.push_back(l.weight(i, j));
      }
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) flat.push_back(l.bias(i));
  }
  return flat;
}

void ParamGrads::Unflatten(const std::vector<double>& flat) {
  size_t k = 0;
  for (LayerGrads& l : layers_) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = flat[k++];
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = flat[k++];
  }
}

absl::StatusOr<ForwardCache> ForwardWithCache(const Mlp& net,
                                              const Eigen::MatrixXd& x) {
  if (static_cast<size_t>(x.cols()) != net.input_dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "mlp forward: input width ", x.cols(), ", expected ", net.input_dim()));
  }
  ForwardCache cache;
  Eigen::MatrixXd current = x;
  for (const DenseLayer& layer : net.layers()) {
    Eigen::MatrixXd pre = current * layer.weight.transpose();
    pre.rowwise() += layer.bias.transpose();
    cache.inputs.push_back(std::move(current));
    current = Apply(layer.activation, pre);
    cache.pre_activations.push_back(std::move(pre));
  }
  cache.output = std::move(current);
  return cache;
}

absl::StatusOr<BackwardResult> Backward(const Mlp& net,
                                        const ForwardCache& cache,
                                        const Eigen::MatrixXd& upstream) {
  if (static_cast<size_t>(upstream.cols()) != net.output_dim() ||
      upstream.rows() != cache.output.rows()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "mlp backward: upstream is ", upstream.rows(), "x", upstream.cols(),
        ", expected ", cache.output.rows(), "x", net.output_dim()));
  }
  const double inv_batch =
      upstream.rows() > 0 ? 1.0 / static_cast<double>(upstream.rows()) : 0.0;
  BackwardResult result;
  result.grads = ParamGrads::ZerosLike(net);
  Eigen::MatrixXd delta = upstream;
  for (size_t i = net.layers().size(); i-- > 0;) {
    const DenseLayer& layer = net.layers()[i];
    ApplyDerivative(layer.activation, cache.pre_activations[i], delta);
    LayerGrads& g = result.grads.layers()[i];
    g.weight.noalias() = delta.transpose() * cache.inputs[i];
    g.weight *= inv_batch;
    g.bias = delta.colwise().sum().transpose() * inv_batch;
    delta = delta * layer.weight;
  }
  result.input_grad = std::move(delta);
  return result;
}

absl::StatusOr<BackwardResult> Backward(const Mlp& net, const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& upstream) {
  ASSIGN_OR_RETURN(ForwardCache cache, ForwardWithCache(net, x));
  return Backward(net, cache, upstream);
}

AdamState AdamState::Create(const Mlp& net, const AdamOptions& options) {
  AdamState state;
  state.first_moment = ParamGrads::ZerosLike(net);
  state.second_moment = ParamGrads::ZerosLike(net);
  state.options = options;
  return state;
}

absl::Status AdamStep(Mlp& net, const ParamGrads& grads, AdamState& state) {
  if (!grads.ShapeMatches(net) || !state.first_moment.ShapeMatches(net) ||
      !state.second_moment.ShapeMatches(net)) {
    return absl::InvalidArgumentError("adam: gradient shape mismatch");
  }
  if (!grads.AllFinite()) {
    return absl::InvalidArgumentError("adam: non-finite gradient");
  }
  const AdamOptions& o = state.options;
  ++state.step;
  const double correction1 = 1.0 - std::pow(o.beta1, state.step);
  const double correction2 = 1.0 - std::pow(o.beta2, state.step);
  for (size_t i = 0; i < net.layers().size(); ++i) {
    DenseLayer& layer = net.mutable_layers()[i];
    const LayerGrads& g = grads.layers()[i];
    LayerGrads& m = state.first_moment.layers()[i];
    LayerGrads& v = state.second_moment.layers()[i];
    m.weight = o.beta1 * m.weight + (1.0 - o.beta1) * g.weight;
    m.bias = o.beta1 * m.bias + (1.0 - o.beta1) * g.bias;
    v.weight = o.beta2 * v.weight + (1.0 - o.beta2) * g.weight.cwiseAbs2();
    v.bias = o.beta2 * v.bias + (1.0 - o.beta2) * g.bias.cwiseAbs2();
    layer.weight.array() -=
        o.learning_rate * (m.weight.array() / correction1) /
        ((v.weight.array() / correction2).sqrt() + o.epsilon);
    layer.bias.array() -= o.learning_rate * (m.bias.array() / correction1) /
                          ((v.bias.array() / correction2).sqrt() + o.epsilon);
  }
  return absl::OkStatus();
}

absl::Status SaveMlp(const Mlp& net, const std::string& stem) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoints are written in little-endian order");
  nlohmann::json header;
  header["schema_version"] = kCheckpointVersion;
  std::vector<size_t> dims = {net.input_dim()};
  std::vector<std::string> activations;
  for (const DenseLayer& layer : net.layers()) {
    dims.push_back(layer.out_dim());
    activations.push_back(ActivationName(layer.activation));
  }
  header["dims"] = dims;
  header["activations"] = activations;
  header["num_parameters"] = net.NumParameters();
  {
    std::ofstream out(stem + ".json");
    if (!out) return absl::PermissionDeniedError(absl::StrCat("cannot write ", stem, ".json"));
    out << header.dump(2) << "\n";
  }
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) return absl::PermissionDeniedError(absl::StrCat("cannot write ", stem, ".bin"));
  ForEachParam(net.layers(), [&](double v) {
    bin.write(reinterpret_cast<const char*>(&v), sizeof(double));
  });
  if (!bin) return absl::DataLossError(absl::StrCat("write failed: ", stem, ".bin"));
  return absl::OkStatus();
}

absl::StatusOr<Mlp> LoadMlp(const std::string& stem) {
  std::ifstream in(stem + ".json");
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", stem, ".json"));
  nlohmann::json header = nlohmann::json::parse(in, nullptr, false);
  if (header.is_discarded() || !header.contains("dims") ||
      !header.contains("activations") || !header.contains("schema_version")) {
    return absl::InvalidArgumentError(absl::StrCat("malformed checkpoint ", stem));
  }
  if (header["schema_version"].get<int>() != kCheckpointVersion) {
    return absl::InvalidArgumentError("unsupported checkpoint version");
  }
  const auto dims = header["dims"].get<std::vector<size_t>>();
  const auto names = header["activations"].get<std::vector<std::string>>();
  if (dims.size() != names.size() + 1 || names.empty()) {
    return absl::InvalidArgumentError("checkpoint dims/activations mismatch");
  }
  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) return absl::NotFoundError(absl::StrCat("cannot open ", stem, ".bin"));
  auto read = [&bin](double& v) {
    bin.read(reinterpret_cast<char*>(&v), sizeof(double));
    return static_cast<bool>(bin);
  };
  std::vector<DenseLayer> layers;
  for (size_t i = 0; i < names.size(); ++i) {
    DenseLayer layer;
    ASSIGN_OR_RETURN(layer.activation, ParseActivation(names[i]));
    layer.weight.resize(dims[i + 1], dims[i]);
    layer.bias.resize(dims[i + 1]);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        if (!read(layer.weight(r, c))) {
          return absl::DataLossError("checkpoint parameter file truncated");
        }
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      if (!read(layer.bias(r))) {
        return absl::DataLossError("checkpoint parameter file truncated");
      }
    }
    layers.push_back(std::move(layer));
  }
  char extra;
  if (bin.read(&extra, 1)) {
    return absl::DataLossError("checkpoint parameter file has trailing bytes");
  }
  return Mlp::Create(std::move(layers));
}

}  // namespace dptldm
