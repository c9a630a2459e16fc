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

#include "dptldm/autoencoder.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptldm/status_macros.h"

namespace dptldm {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double ClampLogVariance(double v) {
  return std::clamp(v, kMinLogVariance, kMaxLogVariance);
}

// Derivative of the clamp: zero where the raw value is outside the range.
double ClampMask(double raw) {
  return (raw >= kMinLogVariance && raw <= kMaxLogVariance) ? 1.0 : 0.0;
}

LatentBatch SplitPosterior(const Eigen::MatrixXd& raw, size_t latent_dim) {
  LatentBatch batch;
  batch.mean = raw.leftCols(latent_dim);
  batch.log_variance = raw.rightCols(latent_dim).unaryExpr(
      [](double v) { return ClampLogVariance(v); });
  return batch;
}

size_t ArgMax(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  size_t best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = k;
  }
  return best;
}

double LogSumExp(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

absl::Status CheckWidth(size_t got, size_t want, const char* what) {
  if (got != want) {
    return absl::InvalidArgumentError(
        absl::StrCat(what, ": width ", got, ", expected ", want));
  }
  return absl::OkStatus();
}

}  // namespace

HeadLayout HeadLayout::FromEncoding(const Encoding& encoding) {
  HeadLayout layout;
  size_t out = 0;
  for (size_t c = 0; c < encoding.schema().size(); ++c) {
    const ColumnSpec& spec = encoding.schema().column(c);
    HeadSpec head;
    head.kind = spec.kind;
    head.input_offset = encoding.blocks()[c].offset;
    head.input_width = encoding.blocks()[c].width;
    head.output_offset = out;
    head.output_width = spec.is_categorical() ? spec.categories.size() : 2;
    out += head.output_width;
    layout.heads_.push_back(head);
  }
  layout.input_width_ = encoding.width();
  layout.output_width_ = out;
  return layout;
}

nlohmann::json HeadLayout::ToJson() const {
  nlohmann::json heads = nlohmann::json::array();
  for (const HeadSpec& h : heads_) {
    heads.push_back({{"kind", h.kind == ColumnKind::kCategorical ? "multinomial"
                                                                 : "gaussian"},
                     {"input_offset", h.input_offset},
                     {"input_width", h.input_width},
                     {"output_offset", h.output_offset},
                     {"output_width", h.output_width}});
  }
  return {{"heads", heads},
          {"input_width", input_width_},
          {"output_width", output_width_}};
}

absl::StatusOr<HeadLayout> HeadLayout::FromJson(const nlohmann::json& json) {
  if (!json.contains("heads") || !json["heads"].is_array()) {
    return absl::InvalidArgumentError("head layout: missing heads");
  }
  HeadLayout layout;
  for (const auto& h : json["heads"]) {
    HeadSpec head;
    const std::string kind = h.at("kind").get<std::string>();
    if (kind == "multinomial") {
      head.kind = ColumnKind::kCategorical;
    } else if (kind == "gaussian") {
      head.kind = ColumnKind::kContinuous;
    } else {
      return absl::InvalidArgumentError(absl::StrCat("unknown head kind ", kind));
    }
    head.input_offset = h.at("input_offset").get<size_t>();
    head.input_width = h.at("input_width").get<size_t>();
    head.output_offset = h.at("output_offset").get<size_t>();
    head.output_width = h.at("output_width").get<size_t>();
    layout.heads_.push_back(head);
  }
  layout.input_width_ = json.at("input_width").get<size_t>();
  layout.output_width_ = json.at("output_width").get<size_t>();
  return layout;
}

size_t DefaultLatentDim(size_t encoded_width) {
  return std::max<size_t>(2, (encoded_width + 3) / 4);
}

absl::StatusOr<AutoencoderModel> AutoencoderModel::Create(Mlp encoder,
                                                          Mlp decoder,
                                                          HeadLayout heads) {
  RETURN_IF_ERROR(CheckWidth(encoder.input_dim(), heads.input_width(),
                             "autoencoder encoder input"));
  RETURN_IF_ERROR(CheckWidth(encoder.output_dim(), 2 * decoder.input_dim(),
                             "autoencoder encoder output"));
  RETURN_IF_ERROR(CheckWidth(decoder.output_dim(), heads.output_width(),
                             "autoencoder decoder output"));
  return AutoencoderModel(std::move(encoder), std::move(decoder),
                          std::move(heads));
}

AutoencoderModel AutoencoderModel::Initialize(const Encoding& encoding,
                                              const AutoencoderConfig& config,
                                              Rng& rng) {
  HeadLayout heads = HeadLayout::FromEncoding(encoding);
  const size_t latent = config.latent_dim > 0
                            ? config.latent_dim
                            : DefaultLatentDim(encoding.width());
  std::vector<size_t> enc_dims = {encoding.width()};
  enc_dims.insert(enc_dims.end(), config.hidden.begin(), config.hidden.end());
  enc_dims.push_back(2 * latent);
  std::vector<size_t> dec_dims = {latent};
  dec_dims.insert(dec_dims.end(), config.hidden.begin(), config.hidden.end());
  dec_dims.push_back(heads.output_width());
  Mlp encoder =
      Mlp::Initialize(enc_dims, Activation::kRelu, Activation::kIdentity, rng);
  Mlp decoder =
      Mlp::Initialize(dec_dims, Activation::kRelu, Activation::kIdentity, rng);
  return AutoencoderModel(std::move(encoder), std::move(decoder),
                          std::move(heads));
}

absl::StatusOr<LatentBatch> EncodeBatch(const AutoencoderModel& model,
                                        const Eigen::MatrixXd& x) {
  ASSIGN_OR_RETURN(Eigen::MatrixXd raw, model.encoder().Forward(x));
  return SplitPosterior(raw, model.latent_dim());
}

absl::StatusOr<LatentPosterior> EncodeRow(const AutoencoderModel& model,
                                          const Eigen::VectorXd& x) {
  ASSIGN_OR_RETURN(LatentBatch batch, EncodeBatch(model, x.transpose()));
  return LatentPosterior{batch.mean.row(0).transpose(),
                         batch.log_variance.row(0).transpose()};
}

Eigen::VectorXd SampleLatent(const LatentPosterior& posterior, Rng& rng) {
  Eigen::VectorXd z(posterior.mean.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    z(j) = posterior.mean(j) +
           std::exp(0.5 * posterior.log_variance(j)) * rng.Normal();
  }
  return z;
}

absl::StatusOr<DistributionHeads> DecodeLatent(const AutoencoderModel& model,
                                               const Eigen::VectorXd& z) {
  RETURN_IF_ERROR(CheckWidth(z.size(), model.latent_dim(), "decode latent"));
  ASSIGN_OR_RETURN(Eigen::MatrixXd out, model.decoder().Forward(z.transpose()));
  DistributionHeads result;
  for (const HeadSpec& head : model.heads().heads()) {
    HeadOutput column;
    column.kind = head.kind;
    if (head.kind == ColumnKind::kContinuous) {
      column.mean = out(0, head.output_offset);
      column.log_variance = ClampLogVariance(out(0, head.output_offset + 1));
    } else {
      const Eigen::RowVectorXd logits =
          out.block(0, head.output_offset, 1, head.output_width);
      const double lse = LogSumExp(logits);
      column.probabilities = (logits.array() - lse).exp().transpose();
    }
    result.columns.push_back(std::move(column));
  }
  return result;
}

double KlStdNormal(const LatentPosterior& posterior) {
  return 0.5 * (posterior.log_variance.array().exp() +
                posterior.mean.array().square() - 1.0 -
                posterior.log_variance.array())
                   .sum();
}

absl::StatusOr<ElboResult> ElboWithNoise(const AutoencoderModel& model,
                                         const Eigen::MatrixXd& x,
                                         const Eigen::MatrixXd& noise,
                                         bool compute_gradients) {
  const Eigen::Index n = x.rows();
  const size_t latent = model.latent_dim();
  if (n == 0) return absl::InvalidArgumentError("elbo: empty batch");
  if (noise.rows() != n || static_cast<size_t>(noise.cols()) != latent) {
    return absl::InvalidArgumentError("elbo: noise shape mismatch");
  }
  ASSIGN_OR_RETURN(ForwardCache enc_cache,
                   ForwardWithCache(model.encoder(), x));
  const Eigen::MatrixXd& raw = enc_cache.output;
  LatentBatch post = SplitPosterior(raw, latent);
  const Eigen::MatrixXd std_dev = (0.5 * post.log_variance.array()).exp();
  const Eigen::MatrixXd z =
      post.mean.array() + std_dev.array() * noise.array();

  ASSIGN_OR_RETURN(ForwardCache dec_cache, ForwardWithCache(model.decoder(), z));
  const Eigen::MatrixXd& out = dec_cache.output;

  Eigen::MatrixXd dec_upstream = Eigen::MatrixXd::Zero(n, out.cols());
  double recon = 0.0;
  for (const HeadSpec& head : model.heads().heads()) {
    const size_t o = head.output_offset;
    if (head.kind == ColumnKind::kContinuous) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double mean = out(r, o);
        const double raw_lv = out(r, o + 1);
        const double lv = ClampLogVariance(raw_lv);
        const double diff = x(r, head.input_offset) - mean;
        const double inv_var = std::exp(-lv);
        recon += 0.5 * (kLog2Pi + lv + diff * diff * inv_var);
        dec_upstream(r, o) = -diff * inv_var;
        dec_upstream(r, o + 1) =
            ClampMask(raw_lv) * 0.5 * (1.0 - diff * diff * inv_var);
      }
    } else {
      for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::RowVectorXd logits = out.block(r, o, 1, head.output_width);
        const size_t truth =
            ArgMax(x.block(r, head.input_offset, 1, head.input_width));
        const double lse = LogSumExp(logits);
        recon += lse - logits(truth);
        dec_upstream.block(r, o, 1, head.output_width) =
            (logits.array() - lse).exp();
        dec_upstream(r, o + truth) -= 1.0;
      }
    }
  }
  const double kl = 0.5 * (post.log_variance.array().exp() +
                           post.mean.array().square() - 1.0 -
                           post.log_variance.array())
                              .sum();
  ElboResult result;
  const double inv_n = 1.0 / static_cast<double>(n);
  result.reconstruction = recon * inv_n;
  result.kl = kl * inv_n;
  result.loss = result.reconstruction + result.kl;
  if (!std::isfinite(result.loss)) {
    return absl::InternalError("elbo: non-finite loss");
  }
  if (!compute_gradients) return result;

  ASSIGN_OR_RETURN(BackwardResult dec_back,
                   Backward(model.decoder(), dec_cache, dec_upstream));
  const Eigen::MatrixXd& dz = dec_back.input_grad;
  Eigen::MatrixXd enc_upstream(n, 2 * latent);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (size_t j = 0; j < latent; ++j) {
      const double mean = post.mean(r, j);
      const double lv = post.log_variance(r, j);
      enc_upstream(r, j) = dz(r, j) + mean;
      enc_upstream(r, latent + j) =
          ClampMask(raw(r, latent + j)) *
          (0.5 * dz(r, j) * noise(r, j) * std_dev(r, j) +
           0.5 * (std::exp(lv) - 1.0));
    }
  }
  ASSIGN_OR_RETURN(BackwardResult enc_back,
                   Backward(model.encoder(), enc_cache, enc_upstream));
  result.encoder_grads = std::move(enc_back.grads);
  result.decoder_grads = std::move(dec_back.grads);
  return result;
}

absl::StatusOr<ElboResult> ElboLossAndGradients(const AutoencoderModel& model,
                                                const Eigen::MatrixXd& x,
                                                Rng& rng) {
  Eigen::MatrixXd noise(x.rows(), model.latent_dim());
  for (Eigen::Index r = 0; r < noise.rows(); ++r) {
    for (Eigen::Index j = 0; j < noise.cols(); ++j) noise(r, j) = rng.Normal();
  }
  return ElboWithNoise(model, x, noise, /*compute_gradients=*/true);
}

absl::StatusOr<double> ElboLoss(const AutoencoderModel& model,
                                const Eigen::MatrixXd& x, Rng& rng) {
  Eigen::MatrixXd noise(x.rows(), model.latent_dim());
  for (Eigen::Index r = 0; r < noise.rows(); ++r) {
    for (Eigen::Index j = 0; j < noise.cols(); ++j) noise(r, j) = rng.Normal();
  }
  ASSIGN_OR_RETURN(ElboResult result,
                   ElboWithNoise(model, x, noise, /*compute_gradients=*/false));
  return result.loss;
}

absl::StatusOr<Eigen::MatrixXd> DecodeToEncoded(const AutoencoderModel& model,
                                                const Eigen::MatrixXd& z) {
  ASSIGN_OR_RETURN(Eigen::MatrixXd out, model.decoder().Forward(z));
  Eigen::MatrixXd encoded =
      Eigen::MatrixXd::Zero(z.rows(), model.heads().input_width());
  for (const HeadSpec& head : model.heads().heads()) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      if (head.kind == ColumnKind::kContinuous) {
        encoded(r, head.input_offset) = out(r, head.output_offset);
      } else {
        const size_t k =
            ArgMax(out.block(r, head.output_offset, 1, head.output_width));
        encoded(r, head.input_offset + k) = 1.0;
      }
    }
  }
  return encoded;
}

absl::StatusOr<Eigen::MatrixXd> Reconstruct(const AutoencoderModel& model,
                                            const Eigen::MatrixXd& x) {
  ASSIGN_OR_RETURN(LatentBatch post, EncodeBatch(model, x));
  return DecodeToEncoded(model, post.mean);
}

absl::Status SaveAutoencoder(const AutoencoderModel& model,
                             const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return absl::PermissionDeniedError(absl::StrCat("cannot create ", dir));
  RETURN_IF_ERROR(SaveMlp(model.encoder(), dir + "/encoder"));
  RETURN_IF_ERROR(SaveMlp(model.decoder(), dir + "/decoder"));
  std::ofstream out(dir + "/heads.json");
  if (!out) return absl::PermissionDeniedError("cannot write heads.json");
  out << model.heads().ToJson().dump(2) << "\n";
  return absl::OkStatus();
}

absl::StatusOr<AutoencoderModel> LoadAutoencoder(const std::string& dir) {
  ASSIGN_OR_RETURN(Mlp encoder, LoadMlp(dir + "/encoder"));
  ASSIGN_OR_RETURN(Mlp decoder, LoadMlp(dir + "/decoder"));
  std::ifstream in(dir + "/heads.json");
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", dir, "/heads.json"));
  const nlohmann::json json = nlohmann::json::parse(in, nullptr, false);
  if (json.is_discarded()) return absl::InvalidArgumentError("malformed heads.json");
  ASSIGN_OR_RETURN(HeadLayout heads, HeadLayout::FromJson(json));
  return AutoencoderModel::Create(std::move(encoder), std::move(decoder),
                                  std::move(heads));
}

}  // namespace dptldm
