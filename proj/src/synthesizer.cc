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

#include "dptldm/synthesizer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptldm/status_macros.h"

namespace dptldm {
namespace {

constexpr int kBundleVersion = 1;

// Non-finite values surface as Internal errors inside the numeric kernels;
// during training they mean the run diverged.
absl::Status AsDivergence(const absl::Status& status) {
  if (status.code() == absl::StatusCode::kInternal) {
    return absl::AbortedError(absl::StrCat("training diverged: ", status.message()));
  }
  return status;
}

template <typename T>
absl::StatusOr<T> AsDivergence(absl::StatusOr<T> result) {
  if (!result.ok()) return AsDivergence(result.status());
  return result;
}

absl::Status CheckFinite(double loss, const char* stage) {
  if (!std::isfinite(loss)) {
    return absl::AbortedError(absl::StrCat(stage, " loss is not finite"));
  }
  return absl::OkStatus();
}

std::vector<std::vector<size_t>> ShuffledBatches(size_t n, size_t batch,
                                                 Rng& rng) {
  const std::vector<size_t> order = rng.Permutation(n);
  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < n; start += batch) {
    const size_t end = std::min(n, start + batch);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

Eigen::MatrixXd GatherRows(const Eigen::MatrixXd& m,
                           const std::vector<size_t>& rows) {
  Eigen::MatrixXd out(rows.size(), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

struct StageOneResult {
  int64_t epochs = 0;
  int64_t rounds = 0;
  double final_loss = 0.0;
};

absl::StatusOr<StageOneResult> TrainAutoencoderPlain(AutoencoderModel& model,
                                                     RowSource& rows,
                                                     const TrainConfig& config,
                                                     Rng& rng) {
  AdamState enc_state = AdamState::Create(model.encoder(), config.adam_ae);
  AdamState dec_state = AdamState::Create(model.decoder(), config.adam_ae);
  StageOneResult result;
  for (int64_t epoch = 0; epoch < config.epochs_ae; ++epoch) {
    double loss_sum = 0.0;
    size_t seen = 0;
    for (const auto& batch : ShuffledBatches(rows.num_rows(), config.batch_ae, rng)) {
      const Eigen::MatrixXd x = rows.Rows(batch);
      ASSIGN_OR_RETURN(ElboResult elbo,
                       AsDivergence(ElboLossAndGradients(model, x, rng)));
      RETURN_IF_ERROR(CheckFinite(elbo.loss, "autoencoder"));
      RETURN_IF_ERROR(AsDivergence(
          AdamStep(model.mutable_encoder(), elbo.encoder_grads, enc_state)));
      RETURN_IF_ERROR(AsDivergence(
          AdamStep(model.mutable_decoder(), elbo.decoder_grads, dec_state)));
      loss_sum += elbo.loss * batch.size();
      seen += batch.size();
      ++result.rounds;
    }
    result.final_loss = loss_sum / seen;
    ++result.epochs;
  }
  return result;
}

// Poisson-sampled DP-SGD. The budget is charged for floor(N E / b) rounds;
// an empty draw releases nothing and is redrawn.
absl::StatusOr<StageOneResult> TrainAutoencoderDp(AutoencoderModel& model,
                                                  RowSource& rows,
                                                  const DpConfig& dp,
                                                  const TrainConfig& config,
                                                  Rng& rng) {
  AdamState enc_state = AdamState::Create(model.encoder(), config.adam_ae);
  AdamState dec_state = AdamState::Create(model.decoder(), config.adam_ae);
  const double n = static_cast<double>(rows.num_rows());
  const int64_t total_rounds = std::max<int64_t>(
      1, static_cast<int64_t>(std::floor(n * dp.epochs / config.batch_ae)));
  const int64_t per_epoch = std::max<int64_t>(1, total_rounds / dp.epochs);
  StageOneResult result;
  result.epochs = dp.epochs;
  double window_loss = 0.0;
  int64_t window_rounds = 0;
  while (result.rounds < total_rounds) {
    const std::vector<size_t> batch =
        PoissonSample(rows.num_rows(), dp.sampling_rate, rng);
    if (batch.empty()) continue;
    const Eigen::MatrixXd x = rows.Rows(batch);
    ASSIGN_OR_RETURN(DpAutoencoderGradients step,
                     AsDivergence(DpAutoencoderStep(model, x, dp, rng)));
    RETURN_IF_ERROR(CheckFinite(step.loss, "autoencoder"));
    RETURN_IF_ERROR(AsDivergence(
        AdamStep(model.mutable_encoder(), step.encoder.values, enc_state)));
    RETURN_IF_ERROR(AsDivergence(
        AdamStep(model.mutable_decoder(), step.decoder.values, dec_state)));
    ++result.rounds;
    // Loss of the last epoch's worth of rounds.
    if (total_rounds - result.rounds < per_epoch) {
      window_loss += step.loss;
      ++window_rounds;
    }
  }
  result.final_loss = window_rounds > 0 ? window_loss / window_rounds : 0.0;
  return result;
}

absl::StatusOr<double> TrainDiffusionStage(DiffusionModel& model,
                                           const Eigen::MatrixXd& latents,
                                           const TrainConfig& config, Rng& rng) {
  AdamState state = AdamState::Create(model.eps_net(), config.adam_diff);
  double final_loss = 0.0;
  for (int64_t epoch = 0; epoch < config.epochs_diff; ++epoch) {
    double loss_sum = 0.0;
    for (const auto& batch :
         ShuffledBatches(latents.rows(), config.batch_diff, rng)) {
      ASSIGN_OR_RETURN(DiffusionLossResult step,
                       AsDivergence(DiffusionLoss(model, GatherRows(latents, batch), rng)));
      RETURN_IF_ERROR(CheckFinite(step.loss, "diffusion"));
      RETURN_IF_ERROR(AsDivergence(
          AdamStep(model.mutable_eps_net(), step.grads, state)));
      loss_sum += step.loss * batch.size();
    }
    final_loss = loss_sum / latents.rows();
  }
  return final_loss;
}

nlohmann::json AdamJson(const AdamOptions& o) {
  return {{"learning_rate", o.learning_rate},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"epsilon", o.epsilon}};
}

AdamOptions AdamFromJson(const nlohmann::json& j, AdamOptions o) {
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.beta1 = j.value("beta1", o.beta1);
  o.beta2 = j.value("beta2", o.beta2);
  o.epsilon = j.value("epsilon", o.epsilon);
  return o;
}

nlohmann::json BudgetJson(const PrivacyBudget& b) {
  return {{"sigma", b.noise_scale},
          {"N", b.dataset_size},
          {"b", b.batch_size},
          {"E", b.epochs},
          {"release_multiplier", b.release_multiplier}};
}

}  // namespace

absl::Status TrainConfig::Validate() const {
  if (epochs_ae < 1 || epochs_diff < 1) {
    return absl::InvalidArgumentError("train: epochs must be >= 1");
  }
  if (batch_ae < 1 || batch_diff < 1) {
    return absl::InvalidArgumentError("train: batch sizes must be >= 1");
  }
  for (const AdamOptions* o : {&adam_ae, &adam_diff}) {
    if (!(o->learning_rate > 0.0)) {
      return absl::InvalidArgumentError("train: learning rate must be positive");
    }
  }
  RETURN_IF_ERROR(Schedule::Create(diffusion.steps, diffusion.beta_start,
                                   diffusion.beta_end)
                      .status());
  if (dp.has_value()) {
    if (!(dp->clip_norm > 0.0)) {
      return absl::InvalidArgumentError("train: clip norm must be positive");
    }
    if (!(dp->noise_scale > 0.0)) {
      return absl::InvalidArgumentError("train: sigma must be positive under DP");
    }
    if (!(dp->separation_target > 0.0 && dp->separation_target < kMaxSeparation)) {
      return absl::InvalidArgumentError(
          "train: separation target must lie in (0, sqrt(2)/2)");
    }
    if (!(dp->release_multiplier > 0.0)) {
      return absl::InvalidArgumentError("train: release multiplier must be positive");
    }
  }
  return absl::OkStatus();
}

nlohmann::json TrainConfig::ToJson() const {
  nlohmann::json j = {
      {"epochs_ae", epochs_ae},
      {"epochs_diff", epochs_diff},
      {"batch_ae", batch_ae},
      {"batch_diff", batch_diff},
      {"latent_dim", autoencoder.latent_dim},
      {"ae_hidden", autoencoder.hidden},
      {"diffusion_hidden", diffusion.hidden},
      {"diffusion_steps", diffusion.steps},
      {"beta_start", diffusion.beta_start},
      {"beta_end", diffusion.beta_end},
      {"adam_ae", AdamJson(adam_ae)},
      {"adam_diff", AdamJson(adam_diff)},
      {"seed", seed},
      {"dp", nullptr}};
  if (dp.has_value()) {
    j["dp"] = {{"clip_norm", dp->clip_norm},
               {"sigma", dp->noise_scale},
               {"separation_target", dp->separation_target},
               {"release_multiplier", dp->release_multiplier}};
  }
  return j;
}

absl::StatusOr<TrainConfig> TrainConfig::FromJson(const nlohmann::json& json) {
  if (!json.is_object()) return absl::InvalidArgumentError("train config: not an object");
  TrainConfig c;
  try {
    c.epochs_ae = json.value("epochs_ae", c.epochs_ae);
    c.epochs_diff = json.value("epochs_diff", c.epochs_diff);
    c.batch_ae = json.value("batch_ae", c.batch_ae);
    c.batch_diff = json.value("batch_diff", c.batch_diff);
    c.autoencoder.latent_dim = json.value("latent_dim", c.autoencoder.latent_dim);
    c.autoencoder.hidden = json.value("ae_hidden", c.autoencoder.hidden);
    c.diffusion.hidden = json.value("diffusion_hidden", c.diffusion.hidden);
    c.diffusion.steps = json.value("diffusion_steps", c.diffusion.steps);
    c.diffusion.beta_start = json.value("beta_start", c.diffusion.beta_start);
    c.diffusion.beta_end = json.value("beta_end", c.diffusion.beta_end);
    if (json.contains("adam_ae")) c.adam_ae = AdamFromJson(json["adam_ae"], c.adam_ae);
    if (json.contains("adam_diff")) {
      c.adam_diff = AdamFromJson(json["adam_diff"], c.adam_diff);
    }
    c.seed = json.value("seed", c.seed);
    if (json.contains("dp") && !json["dp"].is_null()) {
      const auto& d = json["dp"];
      DpSettings dp;
      dp.clip_norm = d.value("clip_norm", dp.clip_norm);
      dp.noise_scale = d.value("sigma", dp.noise_scale);
      dp.separation_target = d.value("separation_target", dp.separation_target);
      dp.release_multiplier = d.value("release_multiplier", dp.release_multiplier);
      c.dp = dp;
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("train config: ", e.what()));
  }
  RETURN_IF_ERROR(c.Validate());
  return c;
}

void RowSource::Count(size_t n) {
  rows_read_ += n;
  if (sealed_) rows_read_after_seal_ += n;
}

Eigen::MatrixXd RowSource::Rows(const std::vector<size_t>& indices) {
  Count(indices.size());
  return GatherRows(rows_, indices);
}

Eigen::MatrixXd RowSource::All() {
  Count(rows_.rows());
  return rows_;
}

absl::StatusOr<TldmModel> Train(const Dataset& train_data,
                                const TrainConfig& config) {
  if (train_data.num_rows() == 0) {
    return absl::InvalidArgumentError("train: empty training data");
  }
  if (train_data.HasMissing()) {
    return absl::InvalidArgumentError("train: training data has missing cells");
  }
  ASSIGN_OR_RETURN(Encoding encoding, Encoding::Fit(train_data));
  ASSIGN_OR_RETURN(Eigen::MatrixXd encoded, encoding.Encode(train_data));
  RowSource rows(std::move(encoded));
  return TrainOnRows(rows, encoding, config);
}

absl::StatusOr<TldmModel> TrainOnRows(RowSource& rows, const Encoding& encoding,
                                      const TrainConfig& config) {
  RETURN_IF_ERROR(config.Validate());
  if (rows.num_rows() == 0) return absl::InvalidArgumentError("train: no rows");
  if (rows.width() != encoding.width()) {
    return absl::InvalidArgumentError("train: rows do not match the encoding");
  }
  const Rng root = Rng(config.seed).Fork("train");
  Rng init_rng = root.Fork("init");
  Rng stage1_rng = root.Fork("stage1");
  Rng stage2_rng = root.Fork("stage2");

  TldmModel model;
  model.encoding = encoding;
  model.config = config;
  model.provenance.seed = config.seed;
  model.autoencoder =
      AutoencoderModel::Initialize(encoding, config.autoencoder, init_rng);

  const double n = static_cast<double>(rows.num_rows());
  StageOneResult stage1;
  if (config.dp.has_value()) {
    const DpSettings& s = *config.dp;
    if (static_cast<double>(config.batch_ae) > n) {
      return absl::InvalidArgumentError("train: DP batch size exceeds N");
    }
    ASSIGN_OR_RETURN(const int64_t max_epochs,
                     MaxEpochs(s.separation_target, s.noise_scale, n,
                               static_cast<double>(config.batch_ae),
                               s.release_multiplier));
    DpConfig dp;
    dp.clip_norm = s.clip_norm;
    dp.noise_scale = s.noise_scale;
    dp.sampling_rate = static_cast<double>(config.batch_ae) / n;
    dp.epochs = std::min(config.epochs_ae, max_epochs);
    ASSIGN_OR_RETURN(stage1, TrainAutoencoderDp(model.autoencoder, rows, dp,
                                                config, stage1_rng));
    PrivacyBudget budget{s.noise_scale, n, static_cast<double>(config.batch_ae),
                         static_cast<double>(dp.epochs), s.release_multiplier};
    ASSIGN_OR_RETURN(AccountantReport report, Account(budget));
    model.provenance.dp = true;
    model.provenance.budget = budget;
    model.provenance.accountant = report;
  } else {
    TrainConfig plain = config;
    plain.batch_ae = std::min<size_t>(config.batch_ae, rows.num_rows());
    ASSIGN_OR_RETURN(stage1, TrainAutoencoderPlain(model.autoencoder, rows,
                                                   plain, stage1_rng));
  }
  model.provenance.epochs_ae_run = stage1.epochs;
  model.provenance.rounds_ae = stage1.rounds;
  model.provenance.final_loss_ae = stage1.final_loss;

  // The only read of training rows after stage 1.
  ASSIGN_OR_RETURN(LatentBatch posterior,
                   AsDivergence(EncodeBatch(model.autoencoder, rows.All())));
  rows.Seal();
  const Eigen::MatrixXd latents = std::move(posterior.mean);
  if (!latents.allFinite()) return absl::AbortedError("encoder means are not finite");

  ASSIGN_OR_RETURN(model.diffusion,
                   DiffusionModel::Initialize(model.autoencoder.latent_dim(),
                                              config.diffusion, init_rng));
  TrainConfig stage2 = config;
  stage2.batch_diff = std::min<size_t>(config.batch_diff, latents.rows());
  ASSIGN_OR_RETURN(model.provenance.final_loss_diff,
                   TrainDiffusionStage(model.diffusion, latents, stage2, stage2_rng));
  model.provenance.epochs_diff_run = config.epochs_diff;
  return model;
}

absl::StatusOr<Dataset> Generate(const TldmModel& model, size_t n,
                                 const Rng& rng) {
  if (n == 0) return Dataset::Empty(model.schema());
  ASSIGN_OR_RETURN(Eigen::MatrixXd z, SampleLatents(model.diffusion, n, rng));
  ASSIGN_OR_RETURN(Eigen::MatrixXd encoded, DecodeToEncoded(model.autoencoder, z));
  return model.encoding.Decode(encoded);
}

nlohmann::json ManifestJson(const TldmModel& model) {
  const Provenance& p = model.provenance;
  nlohmann::json provenance = {{"dp", p.dp},
                               {"seed", p.seed},
                               {"epochs_ae_run", p.epochs_ae_run},
                               {"rounds_ae", p.rounds_ae},
                               {"epochs_diff_run", p.epochs_diff_run},
                               {"final_loss_ae", p.final_loss_ae},
                               {"final_loss_diff", p.final_loss_diff},
                               {"budget", nullptr},
                               {"accountant", nullptr}};
  if (p.budget.has_value()) provenance["budget"] = BudgetJson(*p.budget);
  if (p.accountant.has_value()) provenance["accountant"] = p.accountant->ToJson();
  return {{"bundle_version", kBundleVersion},
          {"config", model.config.ToJson()},
          {"encoding", model.encoding.ToJson()},
          {"provenance", provenance}};
}

absl::Status SaveBundle(const TldmModel& model, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return absl::PermissionDeniedError(absl::StrCat("cannot create ", dir));
  RETURN_IF_ERROR(SaveAutoencoder(model.autoencoder, dir + "/autoencoder"));
  RETURN_IF_ERROR(SaveDiffusion(model.diffusion, dir + "/diffusion"));
  std::ofstream out(dir + "/manifest.json");
  if (!out) return absl::PermissionDeniedError("cannot write manifest.json");
  out << ManifestJson(model).dump(2) << "\n";
  return out ? absl::OkStatus() : absl::DataLossError("short write: manifest.json");
}

absl::StatusOr<TldmModel> LoadBundle(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", dir, "/manifest.json"));
  const nlohmann::json json = nlohmann::json::parse(in, nullptr, false);
  if (json.is_discarded() || !json.is_object()) {
    return absl::InvalidArgumentError("malformed manifest.json");
  }
  TldmModel model;
  try {
    if (json.at("bundle_version").get<int>() != kBundleVersion) {
      return absl::InvalidArgumentError("unsupported bundle version");
    }
    ASSIGN_OR_RETURN(model.config, TrainConfig::FromJson(json.at("config")));
    ASSIGN_OR_RETURN(model.encoding, Encoding::FromJson(json.at("encoding")));
    const auto& p = json.at("provenance");
    model.provenance.dp = p.at("dp").get<bool>();
    model.provenance.seed = p.at("seed").get<uint64_t>();
    model.provenance.epochs_ae_run = p.at("epochs_ae_run").get<int64_t>();
    model.provenance.rounds_ae = p.at("rounds_ae").get<int64_t>();
    model.provenance.epochs_diff_run = p.at("epochs_diff_run").get<int64_t>();
    model.provenance.final_loss_ae = p.at("final_loss_ae").get<double>();
    model.provenance.final_loss_diff = p.at("final_loss_diff").get<double>();
    if (model.provenance.dp) {
      const auto& b = p.at("budget");
      PrivacyBudget budget{b.at("sigma").get<double>(), b.at("N").get<double>(),
                           b.at("b").get<double>(), b.at("E").get<double>(),
                           b.at("release_multiplier").get<double>()};
      // The report is recomputed rather than trusted.
      ASSIGN_OR_RETURN(AccountantReport report, Account(budget));
      model.provenance.budget = budget;
      model.provenance.accountant = report;
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("manifest.json: ", e.what()));
  }
  ASSIGN_OR_RETURN(model.autoencoder, LoadAutoencoder(dir + "/autoencoder"));
  ASSIGN_OR_RETURN(model.diffusion, LoadDiffusion(dir + "/diffusion"));
  if (model.autoencoder.input_dim() != model.encoding.width() ||
      model.diffusion.latent_dim() != model.autoencoder.latent_dim()) {
    return absl::InvalidArgumentError("bundle components do not fit together");
  }
  return model;
}

absl::StatusOr<MarginalSampler> MarginalSampler::Fit(const Dataset& data,
                                                     uint64_t seed) {
  if (data.num_rows() == 0) return absl::InvalidArgumentError("marginal: no rows");
  if (data.HasMissing()) {
    return absl::InvalidArgumentError("marginal: data has missing cells");
  }
  MarginalSampler sampler;
  sampler.schema_ = data.schema();
  sampler.seed_ = seed;
  for (size_t c = 0; c < data.num_columns(); ++c) {
    sampler.columns_.push_back(data.column(c));
  }
  return sampler;
}

Dataset MarginalSampler::Generate(size_t n, const Rng& rng) const {
  std::vector<std::vector<double>> columns(columns_.size());
  for (size_t c = 0; c < columns_.size(); ++c) {
    Rng column_rng = rng.Fork(uint64_t{c});
    columns[c].resize(n);
    for (size_t i = 0; i < n; ++i) {
      columns[c][i] = columns_[c][column_rng.UniformInt(columns_[c].size())];
    }
  }
  // Values come from a valid dataset, so creation cannot fail.
  return *Dataset::Create(schema_, std::move(columns));
}

Dataset MarginalSampler::Generate(size_t n) const {
  return Generate(n, Rng(seed_).Fork("generate"));
}

}  // namespace dptldm
