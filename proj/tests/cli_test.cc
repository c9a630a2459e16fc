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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "absl/strings/str_split.h"
#include "commands.h"
#include "dptldm/fdp_accountant.h"
#include "dptldm/fixtures.h"
#include "dptldm/table.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "run_config.h"
#include "test_util.h"

namespace dptldm {
namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dptldm");
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

// Training and control CSVs, an inferred schema and a small run config.
class Workspace {
 public:
  explicit Workspace(size_t rows, const std::string& extra = "") {
    EXPECT_OK(WriteCsv(MixedFixture(rows, 1), dir_.file("train.csv")));
    EXPECT_OK(WriteCsv(MixedFixture(rows, 2), dir_.file("control.csv")));
    const CliResult schema = Cli({"schema", dir_.file("train.csv"), "--out", dir_.file("schema.json")});
    EXPECT_EQ(schema.code, 0) << schema.err;
    WriteFile(config(), R"(# small run
seed = 7
[data]
train = "train.csv"
control = "control.csv"
schema = "schema.json"
[train]
epochs_ae = 3
epochs_diff = 3
batch_ae = 100
batch_diff = 100
hidden_ae = [16]
hidden_diff = [32]
diffusion_steps = 20
[eval]
n_targets = 30
n_attacks = 30
n_mia_targets = 30
[benchmark]
rows = 300
shadow_attacks = false
)" + extra);
  }

  std::string file(const std::string& name) const { return dir_.file(name); }
  std::string config() const { return dir_.file("run.toml"); }

 private:
  TempDir dir_;
};

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"bogus"}).code, kExitUsage);
  EXPECT_EQ(Cli({"train"}).code, kExitUsage);
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
}

TEST(CliTest, ExitCodeMapping) {
  EXPECT_EQ(ExitCodeFor(absl::OkStatus()), 0);
  EXPECT_EQ(ExitCodeFor(absl::InvalidArgumentError("x")), 2);
  EXPECT_EQ(ExitCodeFor(absl::NotFoundError("x")), 2);
  EXPECT_EQ(ExitCodeFor(absl::FailedPreconditionError("x")), 3);
  EXPECT_EQ(ExitCodeFor(absl::AbortedError("x")), 4);
  EXPECT_EQ(ExitCodeFor(absl::InternalError("x")), 4);
}

TEST(CliSchemaTest, ValidAndMissingFile) {
  TempDir dir;
  WriteFile(dir.file("t.csv"), "a,b\n1.5,x\n2.0,y\n3.7,x\n");
  const CliResult ok = Cli({"schema", dir.file("t.csv"), "--categorical-threshold", "2"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  const nlohmann::json j = nlohmann::json::parse(ok.out);
  EXPECT_OK(TableSchema::FromJson(j));
  const CliResult missing = Cli({"schema", dir.file("absent.csv")});
  EXPECT_EQ(missing.code, kExitUsage);
  EXPECT_FALSE(missing.err.empty());
}

TEST(CliTrainTest, TrainGenerateEvaluate) {
  Workspace ws(400);
  const CliResult train = Cli({"train", "--config", ws.config(), "--out", ws.file("b1")});
  ASSERT_EQ(train.code, 0) << train.err;
  ASSERT_EQ(Cli({"train", "--config", ws.config(), "--out", ws.file("b2")}).code, 0);
  EXPECT_EQ(ReadFile(ws.file("b1/manifest.json")), ReadFile(ws.file("b2/manifest.json")));

  const CliResult gen = Cli({"generate", "--bundle", ws.file("b1"), "--config", ws.config(),
                             "--n", "100", "--out", ws.file("s1.csv")});
  ASSERT_EQ(gen.code, 0) << gen.err;
  ASSERT_EQ(Cli({"generate", "--bundle", ws.file("b1"), "--config", ws.config(), "--n",
                 "100", "--out", ws.file("s2.csv")}).code, 0);
  const std::string csv = ReadFile(ws.file("s1.csv"));
  EXPECT_EQ(csv, ReadFile(ws.file("s2.csv")));
  const std::vector<std::string> lines = absl::StrSplit(csv, '\n', absl::SkipEmpty());
  ASSERT_EQ(lines.size(), 101u);
  EXPECT_EQ(lines[0], ReadFile(ws.file("train.csv")).substr(0, lines[0].size()));
  // Parsing against the schema rejects unknown categories.
  const TableSchema schema =
      *TableSchema::FromJson(nlohmann::json::parse(ReadFile(ws.file("schema.json"))));
  EXPECT_OK(LoadCsv(ws.file("s1.csv"), schema, MissingPolicy::kDrop));

  const CliResult other_seed = Cli({"generate", "--bundle", ws.file("b1"), "--config",
                                    ws.config(), "--n", "100", "--seed", "8"});
  ASSERT_EQ(other_seed.code, 0);
  EXPECT_NE(other_seed.out, csv);

  const CliResult eval = Cli({"evaluate", "--config", ws.config(), "--synth",
                              ws.file("train.csv"), "--out", ws.file("eval")});
  ASSERT_EQ(eval.code, 0) << eval.err;
  const nlohmann::json quality = nlohmann::json::parse(ReadFile(ws.file("eval/quality.json")));
  EXPECT_GE(quality["resemblance"]["aggregate"].get<double>(), 99.0);
  EXPECT_NO_THROW(nlohmann::json::parse(ReadFile(ws.file("eval/privacy.json"))));
  const std::vector<std::string> summary =
      absl::StrSplit(ReadFile(ws.file("eval/summary.csv")), '\n', absl::SkipEmpty());
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[0], "Resem,Discri,Utility,S-out,Link,AIA,MIA");
  EXPECT_EQ(std::vector<std::string>(absl::StrSplit(summary[1], ',')).size(), 7u);
}

TEST(CliTrainTest, DpBundleRecordsSeparation) {
  Workspace ws(2000, "[dp]\nsep = 0.1\nsigma = 5.0\n");
  const CliResult train = Cli({"train", "--config", ws.config(), "--out", ws.file("b"),
                               "--batch-ae", "200", "--epochs-ae", "2"});
  ASSERT_EQ(train.code, 0) << train.err;
  const nlohmann::json manifest = nlohmann::json::parse(ReadFile(ws.file("b/manifest.json")));
  const nlohmann::json& acc = manifest["provenance"]["accountant"];
  ASSERT_TRUE(acc.is_object());
  EXPECT_LE(acc["separation"].get<double>(), 0.1);
  EXPECT_EQ(acc["N"].get<double>(), 2000.0);
}

TEST(CliTrainTest, InfeasibleBudgetExitsThree) {
  Workspace ws(400);
  const CliResult r = Cli({"train", "--config", ws.config(), "--out", ws.file("b"), "--sep",
                           "0.001", "--sigma", "0.5"});
  EXPECT_EQ(r.code, kExitInfeasible);
  EXPECT_NE(r.err.find("max_epochs"), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(ws.file("b/manifest.json")));
}

TEST(CliTrainTest, MissingConfigPieces) {
  TempDir dir;
  WriteFile(dir.file("run.toml"), "[train]\nepochs_ae = 1\n");
  EXPECT_EQ(Cli({"train", "--config", dir.file("run.toml"), "--out", dir.file("b")}).code,
            kExitUsage);
  WriteFile(dir.file("bad.toml"), "seed = 1\n[train]\nno_such_key = 3\n");
  const CliResult r = Cli({"train", "--config", dir.file("bad.toml"), "--out", dir.file("b")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("no_such_key"), std::string::npos);
}

double JsonField(const std::string& text, const std::string& key) {
  return nlohmann::json::parse(text)[key].get<double>();
}

TEST(CliAccountantTest, Examples) {
  const CliResult unit =
      Cli({"accountant", "--sigma", "1", "--N", "1000", "--b", "100", "--E", "10"});
  ASSERT_EQ(unit.code, 0) << unit.err;
  EXPECT_NEAR(JsonField(unit.out, "mu"), 1.7101424755953306, 1e-12);
  EXPECT_NEAR(JsonField(unit.out, "mu"), *HSigma(1.0), 1e-15);

  const CliResult sep = Cli({"accountant", "--sep", "0.1"});
  ASSERT_EQ(sep.code, 0) << sep.err;
  EXPECT_NEAR(JsonField(sep.out, "mu"), 0.3563, 5e-4);

  const CliResult budget =
      Cli({"accountant", "--sep", "0.1", "--sigma", "5", "--N", "1000", "--b", "200"});
  ASSERT_EQ(budget.code, 0) << budget.err;
  EXPECT_EQ(JsonField(budget.out, "max_epochs"), 13.0);

  EXPECT_EQ(Cli({"accountant", "--sep", "0.71"}).code, kExitUsage);
  EXPECT_EQ(Cli({"accountant", "--sigma", "1"}).code, kExitUsage);
  EXPECT_EQ(Cli({"accountant", "--sep", "0.1", "--E", "3"}).code, kExitUsage);
}

TEST(CliBenchmarkTest, OneRowPerCellAndReproducible) {
  // Fixture-driven: drop the data section.
  TempDir dir;
  WriteFile(dir.file("bench.toml"), R"(seed = 3
[train]
epochs_ae = 2
epochs_diff = 2
batch_ae = 30
batch_diff = 30
hidden_ae = [8]
hidden_diff = [16]
diffusion_steps = 10
[eval]
n_targets = 20
n_attacks = 20
n_mia_targets = 20
[benchmark]
rows = 300
shadow_attacks = false
)");
  const CliResult a = Cli({"benchmark", "--config", dir.file("bench.toml"), "--out", dir.file("a")});
  ASSERT_EQ(a.code, 0) << a.err;
  const CliResult b = Cli({"benchmark", "--config", dir.file("bench.toml"), "--out", dir.file("b")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(ReadFile(dir.file("a/benchmark.json")), ReadFile(dir.file("b/benchmark.json")));
  EXPECT_EQ(a.out, b.out);
  const std::vector<std::string> lines = absl::StrSplit(a.out, '\n', absl::SkipEmpty());
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "Model,Sep,Resem,Discri,Utility,S-out,Link,AIA,MIA");
  EXPECT_EQ(lines[1].substr(0, 5), "TLDM,");
  EXPECT_EQ(lines[2].substr(0, 12), "DP-TLDM,0.1,");
  EXPECT_EQ(lines[5].substr(0, 9), "Marginal,");
}

TEST(RunConfigTest, ParsesSubsetAndResolvesPaths) {
  absl::StatusOr<RunConfig> c = ParseRunConfig(R"(seed = 11  # master
[data]
train = "t.csv"
[train]
hidden_ae = [4, 5]
lr_ae = 0.01
[dp]
sep = 0.2
[benchmark]
separations = [0.1, 0.2]
include_marginal = false
)", "/base");
  ASSERT_OK(c);
  EXPECT_EQ(*c->seed, 11u);
  EXPECT_EQ(c->train_csv, "/base/t.csv");
  EXPECT_EQ(c->train.autoencoder.hidden, (std::vector<size_t>{4, 5}));
  EXPECT_EQ(c->train.adam_ae.learning_rate, 0.01);
  ASSERT_TRUE(c->train.dp.has_value());
  EXPECT_EQ(c->train.dp->separation_target, 0.2);
  EXPECT_EQ(c->benchmark.separations, (std::vector<double>{0.1, 0.2}));
  EXPECT_FALSE(c->benchmark.include_marginal);
  EXPECT_FALSE(c->benchmark.train.dp.has_value());
}

TEST(RunConfigTest, RejectsBadValues) {
  EXPECT_FALSE(ParseRunConfig("seed = -1\n", "").ok());
  EXPECT_FALSE(ParseRunConfig("[train]\nepochs_ae = many\n", "").ok());
  EXPECT_FALSE(ParseRunConfig("[data]\ntrain = t.csv\n", "").ok());
  EXPECT_FALSE(ParseRunConfig("[train]\nhidden_ae = [4, -1]\n", "").ok());
  EXPECT_FALSE(ParseRunConfig("[dp]\nenabled = yes\n", "").ok());
  EXPECT_FALSE(ParseRunConfig("[extra]\nx = 1\n", "").ok());
}

TEST(RunConfigTest, FlagsWin) {
  RunConfig c = *ParseRunConfig("seed = 1\n[train]\nepochs_ae = 5\n", "");
  FlagOverrides f;
  f.seed = 9;
  f.epochs_ae = 2;
  f.sep = 0.15;
  ApplyOverrides(f, c);
  EXPECT_EQ(*c.seed, 9u);
  EXPECT_EQ(c.train.epochs_ae, 2);
  EXPECT_EQ(c.benchmark.train.epochs_ae, 2);
  ASSERT_TRUE(c.train.dp.has_value());
  EXPECT_EQ(c.train.dp->separation_target, 0.15);
  EXPECT_EQ(c.benchmark.separations, (std::vector<double>{0.15}));
}

}  // namespace
}  // namespace dptldm
