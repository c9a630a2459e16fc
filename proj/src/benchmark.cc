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

#include "dptldm/benchmark.h"

#include <algorithm>
#include <atomic>
#include <thread>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dptldm/random.h"
#include "dptldm/status_macros.h"

namespace dptldm {
namespace {

struct Cell {
  std::string model;
  std::optional<double> separation;

  std::string Name() const {
    return separation ? absl::StrFormat("%s@%.4f", model, *separation) : model;
  }
};

SynthesizerFn TldmTrainer(const TrainConfig& config) {
  return [config](const Dataset& train, size_t n,
                  uint64_t seed) -> absl::StatusOr<Dataset> {
    TrainConfig c = config;
    c.seed = Rng(seed).Fork("train").seed();
    ASSIGN_OR_RETURN(TldmModel model, Train(train, c));
    return Generate(model, n, Rng(seed).Fork("generate"));
  };
}

absl::StatusOr<Dataset> MarginalSynth(const Dataset& train, size_t n, uint64_t seed) {
  ASSIGN_OR_RETURN(MarginalSampler sampler,
                   MarginalSampler::Fit(train, Rng(seed).Fork("train").seed()));
  return sampler.Generate(n, Rng(seed).Fork("generate"));
}

absl::StatusOr<BenchmarkRow> RunCell(const Cell& cell, const Dataset& train,
                                     const Dataset& control,
                                     const BenchmarkConfig& config) {
  const Rng root = Rng(config.seed).Fork(cell.Name());
  const size_t n_synth = config.n_synth > 0 ? config.n_synth : train.num_rows();
  BenchmarkRow row;
  row.model = cell.model;
  row.separation = cell.separation;
  Dataset synth;
  SynthesizerFn shadow;
  if (cell.model == "Marginal") {
    ASSIGN_OR_RETURN(MarginalSampler sampler,
                     MarginalSampler::Fit(train, root.Fork("train").seed()));
    synth = sampler.Generate(n_synth, root.Fork("generate"));
    shadow = MarginalSynth;
  } else {
    TrainConfig tc = config.train;
    TrainConfig sc = config.shadow_train;
    tc.seed = root.Fork("train").seed();
    tc.dp.reset();
    sc.dp.reset();
    if (cell.separation) {
      DpSettings dp;
      dp.clip_norm = config.clip_norm;
      dp.noise_scale = config.sigma;
      dp.separation_target = *cell.separation;
      tc.dp = dp;
      sc.dp = dp;
      const double rate = static_cast<double>(tc.batch_ae) / train.num_rows();
      sc.batch_ae = std::max<size_t>(
          1, static_cast<size_t>(rate * config.privacy.shadow.shadow_train_size));
    }
    ASSIGN_OR_RETURN(TldmModel model, Train(train, tc));
    ASSIGN_OR_RETURN(synth, Generate(model, n_synth, root.Fork("generate")));
    row.accountant = model.provenance.accountant;
    row.epochs_ae_run = model.provenance.epochs_ae_run;
    shadow = TldmTrainer(sc);
  }
  ASSIGN_OR_RETURN(row.quality,
                   EvaluateQuality(train, synth, control, root.Fork("metric").seed()));
  ASSIGN_OR_RETURN(row.privacy,
                   EvaluatePrivacy(train, control, synth, config.privacy,
                                   config.shadow_attacks ? &shadow : nullptr,
                                   root.Fork("attack").seed()));
  return row;
}

}  // namespace

BenchmarkConfig BenchmarkConfig::Default() {
  BenchmarkConfig c;
  c.train.epochs_ae = 100;
  c.train.epochs_diff = 100;
  c.train.batch_ae = 200;
  c.train.batch_diff = 200;
  c.train.autoencoder.hidden = {128, 128};
  c.train.diffusion.hidden = {128, 128};
  c.train.diffusion.steps = 200;
  c.privacy.n_shadow_targets = 50;
  c.shadow_train = c.train;
  c.shadow_train.epochs_ae = 20;
  c.shadow_train.epochs_diff = 20;
  c.shadow_train.batch_ae = 40;
  c.shadow_train.batch_diff = 40;
  c.shadow_train.autoencoder.hidden = {32};
  c.shadow_train.diffusion.hidden = {32};
  c.shadow_train.diffusion.steps = 50;
  return c;
}

nlohmann::json BenchmarkConfig::ToJson() const {
  return {{"seed", seed},
          {"train", train.ToJson()},
          {"clip_norm", clip_norm},
          {"sigma", sigma},
          {"separations", separations},
          {"include_marginal", include_marginal},
          {"n_synth", n_synth},
          {"shadow_train", shadow_train.ToJson()},
          {"shadow_attacks", shadow_attacks},
          {"privacy",
           {{"n_targets", privacy.n_targets},
            {"n_attacks", privacy.n_attacks},
            {"k_neighbors", privacy.k_neighbors},
            {"n_mia_targets", privacy.n_mia_targets},
            {"n_shadow_targets", privacy.n_shadow_targets},
            {"n_shadow", privacy.shadow.n_shadow},
            {"shadow_train_size", privacy.shadow.shadow_train_size},
            {"shadow_synth_size", privacy.shadow.shadow_synth_size}}}};
}

double BenchmarkRow::QualityScore() const {
  return (quality.resemblance.aggregate + quality.discriminability + quality.utility) /
         3.0;
}

nlohmann::json BenchmarkRow::ToJson() const {
  nlohmann::json j = {{"model", model},
                      {"separation", separation ? nlohmann::json(*separation) : nullptr},
                      {"quality", quality.ToJson()},
                      {"privacy", privacy.ToJson()},
                      {"epochs_ae_run", epochs_ae_run}};
  if (accountant) j["accountant"] = accountant->ToJson();
  return j;
}

absl::StatusOr<std::vector<BenchmarkRow>> RunBenchmark(const Dataset& train,
                                                       const Dataset& control,
                                                       const BenchmarkConfig& config) {
  std::vector<Cell> cells = {{"TLDM", std::nullopt}};
  for (double s : config.separations) cells.push_back({"DP-TLDM", s});
  if (config.include_marginal) cells.push_back({"Marginal", std::nullopt});

  std::vector<absl::StatusOr<BenchmarkRow>> results(
      cells.size(), absl::UnknownError("cell not run"));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < cells.size(); i = next++) {
      results[i] = RunCell(cells[i], train, control, config);
    }
  };
  const int threads =
      std::clamp<int>(config.threads, 1, static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::vector<BenchmarkRow> rows;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (!results[i].ok()) {
      return absl::Status(results[i].status().code(),
                          absl::StrCat(cells[i].Name(), ": ",
                                       results[i].status().message()));
    }
    rows.push_back(*std::move(results[i]));
  }
  return rows;
}

std::string SummaryHeader() { return "Resem,Discri,Utility,S-out,Link,AIA,MIA"; }

std::string SummaryValues(const QualityReport& quality, const PrivacyReport& privacy) {
  return absl::StrFormat("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                         quality.resemblance.aggregate, quality.discriminability,
                         quality.utility, privacy.singling_out.risk,
                         privacy.linkability.risk, privacy.aia.risk, privacy.mia.risk);
}

std::string BenchmarkCsv(const std::vector<BenchmarkRow>& rows) {
  std::string out = absl::StrCat("Model,Sep,", SummaryHeader(), "\n");
  for (const BenchmarkRow& r : rows) {
    absl::StrAppend(&out, r.model, ",",
                    r.separation ? absl::StrFormat("%g", *r.separation) : "",
                    ",", SummaryValues(r.quality, r.privacy), "\n");
  }
  return out;
}

}  // namespace dptldm
