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

#include "run_config.h"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "boost/property_tree/ini_parser.hpp"
#include "boost/property_tree/ptree.hpp"
#include "dptldm/status_macros.h"

namespace dptldm {
namespace {

namespace pt = boost::property_tree;

// Drops '#' comments that are not inside a quoted string.
std::string StripComments(const std::string& text) {
  std::string out;
  bool quoted = false;
  bool comment = false;
  for (char ch : text) {
    if (ch == '\n') {
      quoted = false;
      comment = false;
    } else if (comment) {
      continue;
    } else if (ch == '"') {
      quoted = !quoted;
    } else if (ch == '#' && !quoted) {
      comment = true;
      continue;
    }
    out.push_back(ch);
  }
  return out;
}

class Value {
 public:
  Value(std::string key, std::string raw) : key_(std::move(key)), raw_(std::move(raw)) {}

  absl::StatusOr<std::string> String() const {
    absl::string_view v = raw_;
    if (v.size() < 2 || v.front() != '"' || v.back() != '"') {
      return Error("a quoted string");
    }
    return std::string(v.substr(1, v.size() - 2));
  }
  absl::StatusOr<double> Double() const {
    double d = 0.0;
    if (!absl::SimpleAtod(raw_, &d)) return Error("a number");
    return d;
  }
  absl::StatusOr<int64_t> Int() const {
    int64_t i = 0;
    if (!absl::SimpleAtoi(raw_, &i)) return Error("an integer");
    return i;
  }
  absl::StatusOr<size_t> Count() const {
    ASSIGN_OR_RETURN(int64_t i, Int());
    if (i < 0) return Error("a non-negative integer");
    return static_cast<size_t>(i);
  }
  absl::StatusOr<bool> Bool() const {
    if (raw_ == "true") return true;
    if (raw_ == "false") return false;
    return Error("true or false");
  }
  absl::StatusOr<std::vector<double>> Doubles() const {
    absl::string_view v = raw_;
    if (!absl::ConsumePrefix(&v, "[") || !absl::ConsumeSuffix(&v, "]")) {
      return Error("an array");
    }
    std::vector<double> out;
    for (absl::string_view item : absl::StrSplit(v, ',', absl::SkipWhitespace())) {
      double d = 0.0;
      if (!absl::SimpleAtod(item, &d)) return Error("an array of numbers");
      out.push_back(d);
    }
    return out;
  }
  absl::StatusOr<std::vector<size_t>> Counts() const {
    ASSIGN_OR_RETURN(std::vector<double> ds, Doubles());
    std::vector<size_t> out;
    for (double d : ds) {
      if (!(d >= 1.0) || d != static_cast<double>(static_cast<size_t>(d))) {
        return Error("an array of positive integers");
      }
      out.push_back(static_cast<size_t>(d));
    }
    return out;
  }

 private:
  absl::Status Error(absl::string_view expected) const {
    return absl::InvalidArgumentError(
        absl::StrCat("config: ", key_, " = ", raw_, " is not ", expected));
  }

  std::string key_;
  std::string raw_;
};

using Setter = std::function<absl::Status(const Value&)>;

template <typename T, typename Getter>
Setter Set(T& field, Getter getter) {
  return [&field, getter](const Value& v) -> absl::Status {
    ASSIGN_OR_RETURN(field, (v.*getter)());
    return absl::OkStatus();
  };
}

}  // namespace

absl::StatusOr<RunConfig> ParseRunConfig(const std::string& text,
                                         const std::string& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(StripComments(text));
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    return absl::InvalidArgumentError(absl::StrCat("config: ", e.message(), " at line ",
                                                   e.line()));
  }
  RunConfig c;
  std::optional<bool> dp_enabled;
  DpSettings dp;
  bool dp_touched = false;
  uint64_t seed = 0;
  bool seed_set = false;
  auto path = [&](std::string& field) {
    return [&field, &base_dir](const Value& v) -> absl::Status {
      ASSIGN_OR_RETURN(std::string p, v.String());
      field = std::filesystem::path(p).is_absolute()
                  ? p
                  : (std::filesystem::path(base_dir) / p).string();
      return absl::OkStatus();
    };
  };
  auto dp_field = [&](double& field) {
    return [&field, &dp_touched](const Value& v) -> absl::Status {
      ASSIGN_OR_RETURN(field, v.Double());
      dp_touched = true;
      return absl::OkStatus();
    };
  };
  BenchmarkConfig& b = c.benchmark;
  const std::map<std::string, Setter> setters = {
      {"seed",
       [&](const Value& v) -> absl::Status {
         ASSIGN_OR_RETURN(int64_t s, v.Int());
         if (s < 0) return absl::InvalidArgumentError("config: seed must be >= 0");
         seed = static_cast<uint64_t>(s);
         seed_set = true;
         return absl::OkStatus();
       }},
      {"data.train", path(c.train_csv)},
      {"data.control", path(c.control_csv)},
      {"data.schema", path(c.schema_json)},
      {"train.epochs_ae", Set(c.train.epochs_ae, &Value::Int)},
      {"train.epochs_diff", Set(c.train.epochs_diff, &Value::Int)},
      {"train.batch_ae", Set(c.train.batch_ae, &Value::Count)},
      {"train.batch_diff", Set(c.train.batch_diff, &Value::Count)},
      {"train.latent_dim", Set(c.train.autoencoder.latent_dim, &Value::Count)},
      {"train.hidden_ae", Set(c.train.autoencoder.hidden, &Value::Counts)},
      {"train.hidden_diff", Set(c.train.diffusion.hidden, &Value::Counts)},
      {"train.lr_ae", Set(c.train.adam_ae.learning_rate, &Value::Double)},
      {"train.lr_diff", Set(c.train.adam_diff.learning_rate, &Value::Double)},
      {"train.diffusion_steps",
       [&](const Value& v) -> absl::Status {
         ASSIGN_OR_RETURN(int64_t s, v.Int());
         c.train.diffusion.steps = static_cast<int>(s);
         return absl::OkStatus();
       }},
      {"dp.enabled",
       [&](const Value& v) -> absl::Status {
         ASSIGN_OR_RETURN(dp_enabled, v.Bool());
         return absl::OkStatus();
       }},
      {"dp.sigma", dp_field(dp.noise_scale)},
      {"dp.clip_norm", dp_field(dp.clip_norm)},
      {"dp.sep", dp_field(dp.separation_target)},
      {"dp.release_multiplier", dp_field(dp.release_multiplier)},
      {"generate.n", Set(c.generate_n, &Value::Count)},
      {"eval.n_targets", Set(c.privacy.n_targets, &Value::Count)},
      {"eval.n_attacks", Set(c.privacy.n_attacks, &Value::Count)},
      {"eval.k", Set(c.privacy.k_neighbors, &Value::Count)},
      {"eval.n_mia_targets", Set(c.privacy.n_mia_targets, &Value::Count)},
      {"eval.n_shadow_targets", Set(c.privacy.n_shadow_targets, &Value::Count)},
      {"eval.n_shadow",
       [&](const Value& v) -> absl::Status {
         ASSIGN_OR_RETURN(int64_t s, v.Int());
         c.privacy.shadow.n_shadow = static_cast<int>(s);
         return absl::OkStatus();
       }},
      {"eval.shadow_train_size", Set(c.privacy.shadow.shadow_train_size, &Value::Count)},
      {"eval.shadow_synth_size", Set(c.privacy.shadow.shadow_synth_size, &Value::Count)},
      {"benchmark.rows", Set(c.benchmark_rows, &Value::Count)},
      {"benchmark.train_fraction", Set(c.benchmark_train_fraction, &Value::Double)},
      {"benchmark.separations", Set(b.separations, &Value::Doubles)},
      {"benchmark.sigma", Set(b.sigma, &Value::Double)},
      {"benchmark.clip_norm", Set(b.clip_norm, &Value::Double)},
      {"benchmark.include_marginal", Set(b.include_marginal, &Value::Bool)},
      {"benchmark.shadow_attacks", Set(b.shadow_attacks, &Value::Bool)},
      {"benchmark.n_synth", Set(b.n_synth, &Value::Count)},
  };
  auto apply = [&](const std::string& key, const std::string& raw) -> absl::Status {
    auto it = setters.find(key);
    if (it == setters.end()) {
      return absl::InvalidArgumentError(absl::StrCat("config: unknown key ", key));
    }
    return it->second(Value(key, raw));
  };
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      RETURN_IF_ERROR(apply(name, node.data()));
      continue;
    }
    for (const auto& [key, leaf] : node) {
      RETURN_IF_ERROR(apply(absl::StrCat(name, ".", key), leaf.data()));
    }
  }
  if (seed_set) c.seed = seed;
  if (dp_enabled.value_or(dp_touched)) c.train.dp = dp;
  // The benchmark trains with the [train] sizes unless told otherwise.
  const bool train_section = tree.find("train") != tree.not_found();
  if (train_section) {
    b.train = c.train;
    b.train.dp.reset();
  }
  b.privacy = c.privacy;
  return c;
}

absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open config ", path));
  std::stringstream text;
  text << in.rdbuf();
  return ParseRunConfig(text.str(), std::filesystem::path(path).parent_path().string());
}

void ApplyOverrides(const FlagOverrides& flags, RunConfig& config) {
  if (flags.seed) config.seed = flags.seed;
  for (TrainConfig* t : {&config.train, &config.benchmark.train}) {
    if (flags.epochs_ae) t->epochs_ae = *flags.epochs_ae;
    if (flags.epochs_diff) t->epochs_diff = *flags.epochs_diff;
    if (flags.batch_ae) t->batch_ae = *flags.batch_ae;
    if (flags.batch_diff) t->batch_diff = *flags.batch_diff;
    if (flags.latent_dim) t->autoencoder.latent_dim = *flags.latent_dim;
  }
  if (flags.sep || flags.sigma || flags.clip_norm) {
    DpSettings dp = config.train.dp.value_or(DpSettings{});
    if (flags.sep) dp.separation_target = *flags.sep;
    if (flags.sigma) dp.noise_scale = *flags.sigma;
    if (flags.clip_norm) dp.clip_norm = *flags.clip_norm;
    config.train.dp = dp;
  }
  if (flags.sep) config.benchmark.separations = {*flags.sep};
  if (flags.sigma) config.benchmark.sigma = *flags.sigma;
  if (flags.clip_norm) config.benchmark.clip_norm = *flags.clip_norm;
}

}  // namespace dptldm
