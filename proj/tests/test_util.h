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

// Helpers shared by the unit tests.

#ifndef DPTLDM_TESTS_TEST_UTIL_H_
#define DPTLDM_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dptldm/mlp.h"
#include "dptldm/random.h"
#include "dptldm/table.h"
#include "gtest/gtest.h"

namespace dptldm {

inline const absl::Status& StatusOf(const absl::Status& s) { return s; }
template <typename T>
const absl::Status& StatusOf(const absl::StatusOr<T>& s) {
  return s.status();
}

#define ASSERT_OK(expr) ASSERT_TRUE((expr).ok()) << ::dptldm::StatusOf(expr)
#define EXPECT_OK(expr) EXPECT_TRUE((expr).ok()) << ::dptldm::StatusOf(expr)

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = std::filesystem::temp_directory_path() /
            ("dptldm_" + std::string(info->test_suite_name()) + "_" + info->name());
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }

  std::string path() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline TableSchema MakeSchema(std::vector<ColumnSpec> columns) {
  return *TableSchema::Create(std::move(columns));
}

inline Dataset MakeDataset(const TableSchema& schema,
                           std::vector<std::vector<double>> columns) {
  absl::StatusOr<Dataset> d = Dataset::Create(schema, std::move(columns));
  EXPECT_TRUE(d.ok()) << d.status();
  return *d;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps entries
// that are zero up to rounding from dominating.
inline double MaxRelativeError(const std::vector<double>& a,
                               const std::vector<double>& b, double floor = 1e-6) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

// Copy of `net` with flat parameter `index` shifted by `delta`.
inline Mlp Perturbed(const Mlp& net, size_t index, double delta) {
  ParamGrads p = ParamGrads::ZerosLike(net);
  std::vector<double> d(p.size(), 0.0);
  d[index] = delta;
  p.Unflatten(d);
  Mlp m = net;
  for (size_t l = 0; l < m.layers().size(); ++l) {
    m.mutable_layers()[l].weight += p.layers()[l].weight;
    m.mutable_layers()[l].bias += p.layers()[l].bias;
  }
  return m;
}

// Central differences of `loss` over every parameter of `net`.
template <typename LossOfNet>
std::vector<double> FiniteDifferenceGradient(const Mlp& net, LossOfNet loss,
                                             double h = 1e-5) {
  std::vector<double> out(net.NumParameters());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = (loss(Perturbed(net, i, h)) - loss(Perturbed(net, i, -h))) / (2 * h);
  }
  return out;
}

}  // namespace dptldm

#endif  // DPTLDM_TESTS_TEST_UTIL_H_
