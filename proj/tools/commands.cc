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

#include "commands.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <tuple>

#include "CLI11.hpp"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dptldm/attacks.h"
#include "dptldm/benchmark.h"
#include "dptldm/fdp_accountant.h"
#include "dptldm/fixtures.h"
#include "dptldm/quality.h"
#include "dptldm/random.h"
#include "dptldm/status_macros.h"
#include "dptldm/synthesizer.h"
#include "dptldm/table.h"
#include "json.hpp"
#include "run_config.h"

namespace dptldm {
namespace {

absl::Status WriteText(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::PermissionDeniedError(absl::StrCat("cannot write ", path));
  out << text;
  return out ? absl::OkStatus()
             : absl::DataLossError(absl::StrCat("short write to ", path));
}

absl::StatusOr<nlohmann::json> ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": ", e.what()));
  }
}

absl::StatusOr<TableSchema> LoadSchema(const std::string& path) {
  ASSIGN_OR_RETURN(nlohmann::json j, ReadJson(path));
  return TableSchema::FromJson(j);
}

absl::Status RequirePath(const std::string& path, absl::string_view what) {
  if (path.empty()) return absl::InvalidArgumentError(absl::StrCat("missing ", what));
  if (!std::filesystem::exists(path)) {
    return absl::NotFoundError(absl::StrCat(what, " not found: ", path));
  }
  return absl::OkStatus();
}

// Smallest sigma admitting one epoch; nullopt beyond 1e6.
std::optional<double> SigmaForOneEpoch(double sep, double n, double b, double m) {
  auto feasible = [&](double sigma) { return MaxEpochs(sep, sigma, n, b, m).ok(); };
  double hi = 1.0;
  while (!feasible(hi)) {
    hi *= 2.0;
    if (hi > 1e6) return std::nullopt;
  }
  double lo = hi / 2.0;
  while (feasible(lo) && lo > 1e-3) lo /= 2.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Options shared by train and benchmark.
struct OverrideFlags {
  uint64_t seed = 0;
  double sep = 0.0;
  double sigma = 0.0;
  double clip_norm = 0.0;
  int64_t epochs_ae = 0;
  int64_t epochs_diff = 0;
  size_t batch_ae = 0;
  size_t batch_diff = 0;
  size_t latent_dim = 0;
  std::map<std::string, CLI::Option*> options;

  void Register(CLI::App& app) {
    options["seed"] = app.add_option("--seed", seed, "Master seed");
    options["sep"] = app.add_option("--sep", sep, "Separation target");
    options["sigma"] = app.add_option("--sigma", sigma, "DP-SGD noise multiplier");
    options["clip-norm"] = app.add_option("--clip-norm", clip_norm, "Clipping bound C");
    options["epochs-ae"] = app.add_option("--epochs-ae", epochs_ae, "Autoencoder epochs");
    options["epochs-diff"] =
        app.add_option("--epochs-diff", epochs_diff, "Diffusion epochs");
    options["batch-ae"] = app.add_option("--batch-ae", batch_ae, "Autoencoder batch");
    options["batch-diff"] = app.add_option("--batch-diff", batch_diff, "Diffusion batch");
    options["latent-dim"] = app.add_option("--latent-dim", latent_dim, "Latent width");
  }

  bool Given(const std::string& name) const { return options.at(name)->count() > 0; }

  FlagOverrides Collect() const {
    FlagOverrides f;
    if (Given("seed")) f.seed = seed;
    if (Given("sep")) f.sep = sep;
    if (Given("sigma")) f.sigma = sigma;
    if (Given("clip-norm")) f.clip_norm = clip_norm;
    if (Given("epochs-ae")) f.epochs_ae = epochs_ae;
    if (Given("epochs-diff")) f.epochs_diff = epochs_diff;
    if (Given("batch-ae")) f.batch_ae = batch_ae;
    if (Given("batch-diff")) f.batch_diff = batch_diff;
    if (Given("latent-dim")) f.latent_dim = latent_dim;
    return f;
  }
};

absl::StatusOr<RunConfig> ResolveConfig(const std::string& config_path,
                                        const OverrideFlags& flags) {
  RunConfig config;
  if (!config_path.empty()) {
    ASSIGN_OR_RETURN(config, LoadRunConfig(config_path));
  }
  ApplyOverrides(flags.Collect(), config);
  if (!config.seed) {
    return absl::InvalidArgumentError("a seed is required (config seed or --seed)");
  }
  return config;
}

absl::Status CmdSchema(const std::string& input, const std::string& out_path,
                       size_t threshold, std::ostream& out) {
  SchemaInferenceOptions options;
  options.categorical_threshold = threshold;
  ASSIGN_OR_RETURN(TableSchema schema, InferSchema(input, options));
  const std::string text = schema.ToJson().dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
    return absl::OkStatus();
  }
  return WriteText(out_path, text);
}

absl::Status CmdTrain(const std::string& config_path, const OverrideFlags& flags,
                      const std::string& out_dir, std::ostream& out) {
  if (out_dir.empty()) return absl::InvalidArgumentError("--out is required");
  ASSIGN_OR_RETURN(RunConfig config, ResolveConfig(config_path, flags));
  RETURN_IF_ERROR(RequirePath(config.train_csv, "training CSV"));
  RETURN_IF_ERROR(RequirePath(config.schema_json, "schema"));
  ASSIGN_OR_RETURN(TableSchema schema, LoadSchema(config.schema_json));
  ASSIGN_OR_RETURN(Dataset train,
                   LoadCsv(config.train_csv, schema, MissingPolicy::kDrop));
  config.train.seed = Rng(*config.seed).Fork("train").seed();
  absl::StatusOr<TldmModel> model = Train(train, config.train);
  if (!model.ok()) {
    if (model.status().code() != absl::StatusCode::kFailedPrecondition ||
        !config.train.dp) {
      return model.status();
    }
    const DpSettings& dp = *config.train.dp;
    std::string hint;
    if (std::optional<double> sigma =
            SigmaForOneEpoch(dp.separation_target, train.num_rows(),
                             config.train.batch_ae, dp.release_multiplier)) {
      hint = absl::StrFormat("; sigma >= %.4g admits max_epochs >= 1", *sigma);
    }
    return absl::FailedPreconditionError(
        absl::StrCat(model.status().message(), hint));
  }
  RETURN_IF_ERROR(SaveBundle(*model, out_dir));
  nlohmann::json summary = {{"bundle", out_dir},
                            {"epochs_ae_run", model->provenance.epochs_ae_run},
                            {"rounds_ae", model->provenance.rounds_ae}};
  if (model->provenance.accountant) {
    summary["accountant"] = model->provenance.accountant->ToJson();
  }
  out << summary.dump(2) << "\n";
  return absl::OkStatus();
}

absl::Status CmdGenerate(const std::string& bundle, const std::string& config_path,
                         const OverrideFlags& flags, size_t n, bool n_given,
                         const std::string& out_path, std::ostream& out) {
  ASSIGN_OR_RETURN(RunConfig config, ResolveConfig(config_path, flags));
  if (!n_given) n = config.generate_n;
  if (n == 0) return absl::InvalidArgumentError("--n (or generate.n) is required");
  RETURN_IF_ERROR(RequirePath(bundle, "bundle"));
  ASSIGN_OR_RETURN(TldmModel model, LoadBundle(bundle));
  ASSIGN_OR_RETURN(Dataset synth, Generate(model, n, Rng(*config.seed).Fork("generate")));
  if (out_path.empty()) {
    out << FormatCsv(synth);
    return absl::OkStatus();
  }
  return WriteCsv(synth, out_path);
}

struct EvaluateArgs {
  std::string train;
  std::string control;
  std::string synth;
  std::string schema;
  std::string out_dir;
};

absl::Status CmdEvaluate(EvaluateArgs args, const std::string& config_path,
                         const OverrideFlags& flags, std::ostream& out) {
  if (args.out_dir.empty()) return absl::InvalidArgumentError("--out is required");
  ASSIGN_OR_RETURN(RunConfig config, ResolveConfig(config_path, flags));
  if (args.train.empty()) args.train = config.train_csv;
  if (args.control.empty()) args.control = config.control_csv;
  if (args.schema.empty()) args.schema = config.schema_json;
  RETURN_IF_ERROR(RequirePath(args.train, "training CSV"));
  RETURN_IF_ERROR(RequirePath(args.control, "control CSV"));
  RETURN_IF_ERROR(RequirePath(args.synth, "synthetic CSV"));
  RETURN_IF_ERROR(RequirePath(args.schema, "schema"));
  ASSIGN_OR_RETURN(TableSchema schema, LoadSchema(args.schema));
  ASSIGN_OR_RETURN(Dataset train, LoadCsv(args.train, schema, MissingPolicy::kDrop));
  ASSIGN_OR_RETURN(Dataset control,
                   LoadCsv(args.control, schema, MissingPolicy::kDrop));
  ASSIGN_OR_RETURN(Dataset synth, LoadCsv(args.synth, schema, MissingPolicy::kDrop));
  const Rng root(*config.seed);
  ASSIGN_OR_RETURN(QualityReport quality,
                   EvaluateQuality(train, synth, control, root.Fork("metric").seed()));
  ASSIGN_OR_RETURN(PrivacyReport privacy,
                   EvaluatePrivacy(train, control, synth, config.privacy, nullptr,
                                   root.Fork("attack").seed()));
  const std::string summary =
      absl::StrCat(SummaryHeader(), "\n", SummaryValues(quality, privacy), "\n");
  RETURN_IF_ERROR(
      WriteText(args.out_dir + "/quality.json", quality.ToJson().dump(2) + "\n"));
  RETURN_IF_ERROR(
      WriteText(args.out_dir + "/privacy.json", privacy.ToJson().dump(2) + "\n"));
  RETURN_IF_ERROR(WriteText(args.out_dir + "/summary.csv", summary));
  out << summary;
  return absl::OkStatus();
}

struct AccountantArgs {
  double sigma = 0.0;
  double n = 0.0;
  double b = 0.0;
  double e = 0.0;
  double sep = 0.0;
  double m = 1.0;
  bool has_sigma = false;
  bool has_n = false;
  bool has_b = false;
  bool has_e = false;
  bool has_sep = false;
};

absl::Status CmdAccountant(const AccountantArgs& a, const std::string& out_path,
                           std::ostream& out) {
  nlohmann::json result;
  if (a.has_sep) {
    if (a.has_e) {
      return absl::InvalidArgumentError("--sep and --E are mutually exclusive");
    }
    ASSIGN_OR_RETURN(const double mu, MuOfSeparation(a.sep));
    result = {{"separation_target", a.sep}, {"mu", mu}};
    if (a.has_sigma && a.has_n && a.has_b) {
      absl::StatusOr<int64_t> epochs = MaxEpochs(a.sep, a.sigma, a.n, a.b, a.m);
      if (epochs.ok()) {
        result["max_epochs"] = *epochs;
        ASSIGN_OR_RETURN(AccountantReport report,
                         Account({a.sigma, a.n, a.b, static_cast<double>(*epochs), a.m}));
        result["report"] = report.ToJson();
      } else if (epochs.status().code() == absl::StatusCode::kFailedPrecondition) {
        result["max_epochs"] = 0;
        result["message"] = std::string(epochs.status().message());
      } else {
        return epochs.status();
      }
    } else if (a.has_sigma || a.has_n || a.has_b) {
      return absl::InvalidArgumentError("--sep with a budget needs --sigma, --N and --b");
    }
  } else {
    if (!(a.has_sigma && a.has_n && a.has_b && a.has_e)) {
      return absl::InvalidArgumentError(
          "give --sigma --N --b --E, or --sep [--sigma --N --b]");
    }
    ASSIGN_OR_RETURN(AccountantReport report, Account({a.sigma, a.n, a.b, a.e, a.m}));
    result = report.ToJson();
  }
  const std::string text = result.dump(2) + "\n";
  out << text;
  return out_path.empty() ? absl::OkStatus() : WriteText(out_path, text);
}

int ThreadsFromEnvironment() {
  const char* env = std::getenv("DPTLDM_THREADS");
  int threads = 1;
  if (env == nullptr || !absl::SimpleAtoi(env, &threads) || threads < 1) return 1;
  return threads;
}

absl::Status CmdBenchmark(const std::string& config_path, const OverrideFlags& flags,
                          const std::string& out_dir, std::ostream& out) {
  if (out_dir.empty()) return absl::InvalidArgumentError("--out is required");
  ASSIGN_OR_RETURN(RunConfig config, ResolveConfig(config_path, flags));
  const Rng root(*config.seed);
  Dataset train;
  Dataset control;
  std::string source = "fixture";
  if (!config.train_csv.empty()) {
    RETURN_IF_ERROR(RequirePath(config.train_csv, "training CSV"));
    RETURN_IF_ERROR(RequirePath(config.schema_json, "schema"));
    ASSIGN_OR_RETURN(TableSchema schema, LoadSchema(config.schema_json));
    ASSIGN_OR_RETURN(train, LoadCsv(config.train_csv, schema, MissingPolicy::kDrop));
    source = config.train_csv;
    if (!config.control_csv.empty()) {
      RETURN_IF_ERROR(RequirePath(config.control_csv, "control CSV"));
      ASSIGN_OR_RETURN(control,
                       LoadCsv(config.control_csv, schema, MissingPolicy::kDrop));
    } else {
      ASSIGN_OR_RETURN(std::tie(train, control),
                       Split(train, config.benchmark_train_fraction,
                             root.Fork("split").seed()));
    }
  } else {
    const Dataset data = MixedFixture(config.benchmark_rows, root.Fork("data").seed());
    ASSIGN_OR_RETURN(std::tie(train, control),
                     Split(data, config.benchmark_train_fraction,
                           root.Fork("split").seed()));
  }
  BenchmarkConfig bench = config.benchmark;
  bench.seed = *config.seed;
  bench.threads = ThreadsFromEnvironment();
  ASSIGN_OR_RETURN(std::vector<BenchmarkRow> rows, RunBenchmark(train, control, bench));
  const std::string csv = BenchmarkCsv(rows);
  nlohmann::json j = {{"source", source},
                      {"train_rows", train.num_rows()},
                      {"control_rows", control.num_rows()},
                      {"config", bench.ToJson()},
                      {"rows", nlohmann::json::array()}};
  j["config"].erase("threads");
  for (const BenchmarkRow& r : rows) j["rows"].push_back(r.ToJson());
  RETURN_IF_ERROR(WriteText(out_dir + "/benchmark.csv", csv));
  RETURN_IF_ERROR(WriteText(out_dir + "/benchmark.json", j.dump(2) + "\n"));
  out << csv;
  return absl::OkStatus();
}

}  // namespace

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return kExitOk;
    case absl::StatusCode::kFailedPrecondition:
      return kExitInfeasible;
    case absl::StatusCode::kAborted:
    case absl::StatusCode::kInternal:
      return kExitDivergence;
    default:
      return kExitUsage;
  }
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Differentially private tabular latent diffusion"};
  app.require_subcommand(1);

  CLI::App* schema = app.add_subcommand("schema", "Infer a schema from a CSV file");
  std::string schema_input;
  std::string schema_out;
  size_t threshold = SchemaInferenceOptions{}.categorical_threshold;
  schema->add_option("input", schema_input, "CSV file")->required();
  schema->add_option("--out", schema_out, "Output schema.json (default stdout)");
  schema->add_option("--categorical-threshold", threshold,
                     "Numeric columns with at most this many values are categorical");

  CLI::App* train = app.add_subcommand("train", "Train a synthesizer bundle");
  std::string train_config;
  std::string train_out;
  OverrideFlags train_flags;
  train->add_option("--config", train_config, "TOML run configuration")->required();
  train->add_option("--out", train_out, "Bundle directory")->required();
  train_flags.Register(*train);

  CLI::App* generate = app.add_subcommand("generate", "Sample rows from a bundle");
  std::string bundle;
  std::string generate_config;
  std::string generate_out;
  size_t n = 0;
  OverrideFlags generate_flags;
  generate->add_option("--bundle", bundle, "Bundle directory")->required();
  generate->add_option("--config", generate_config, "TOML run configuration");
  CLI::Option* n_opt = generate->add_option("--n", n, "Rows to generate");
  generate->add_option("--out", generate_out, "Output CSV (default stdout)");
  generate_flags.Register(*generate);

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Quality and privacy of a synthetic table");
  EvaluateArgs eval_args;
  std::string evaluate_config;
  OverrideFlags evaluate_flags;
  evaluate->add_option("--train", eval_args.train, "Real training CSV");
  evaluate->add_option("--control", eval_args.control, "Real control CSV");
  evaluate->add_option("--synth", eval_args.synth, "Synthetic CSV")->required();
  evaluate->add_option("--schema", eval_args.schema, "schema.json");
  evaluate->add_option("--out", eval_args.out_dir, "Output directory")->required();
  evaluate->add_option("--config", evaluate_config, "TOML run configuration");
  evaluate_flags.Register(*evaluate);

  CLI::App* accountant = app.add_subcommand("accountant", "Privacy accounting");
  AccountantArgs acc;
  std::string accountant_out;
  CLI::Option* o_sigma = accountant->add_option("--sigma", acc.sigma, "Noise multiplier");
  CLI::Option* o_n = accountant->add_option("--N", acc.n, "Dataset size");
  CLI::Option* o_b = accountant->add_option("--b", acc.b, "Expected batch size");
  CLI::Option* o_e = accountant->add_option("--E", acc.e, "Epochs");
  CLI::Option* o_sep = accountant->add_option("--sep", acc.sep, "Separation target");
  accountant->add_option("--release-multiplier", acc.m, "Releases per round");
  accountant->add_option("--out", accountant_out, "Also write the report here");

  CLI::App* benchmark =
      app.add_subcommand("benchmark", "Risk-utility table over all synthesizers");
  std::string benchmark_config;
  std::string benchmark_out;
  OverrideFlags benchmark_flags;
  benchmark->add_option("--config", benchmark_config, "TOML run configuration");
  benchmark->add_option("--out", benchmark_out, "Output directory")->required();
  benchmark_flags.Register(*benchmark);

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    app.exit(e, out, err);
    return kExitUsage;
  }

  absl::Status status;
  if (schema->parsed()) {
    status = CmdSchema(schema_input, schema_out, threshold, out);
  } else if (train->parsed()) {
    status = CmdTrain(train_config, train_flags, train_out, out);
  } else if (generate->parsed()) {
    status = CmdGenerate(bundle, generate_config, generate_flags, n, n_opt->count() > 0,
                         generate_out, out);
  } else if (evaluate->parsed()) {
    status = CmdEvaluate(eval_args, evaluate_config, evaluate_flags, out);
  } else if (accountant->parsed()) {
    acc.has_sigma = o_sigma->count() > 0;
    acc.has_n = o_n->count() > 0;
    acc.has_b = o_b->count() > 0;
    acc.has_e = o_e->count() > 0;
    acc.has_sep = o_sep->count() > 0;
    status = CmdAccountant(acc, accountant_out, out);
  } else if (benchmark->parsed()) {
    status = CmdBenchmark(benchmark_config, benchmark_flags, benchmark_out, out);
  }
  if (!status.ok()) err << "error: " << status.message() << "\n";
  return ExitCodeFor(status);
}

}  // namespace dptldm
