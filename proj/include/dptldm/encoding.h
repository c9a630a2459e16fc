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

#ifndef DPTLDM_ENCODING_H_
#define DPTLDM_ENCODING_H_

#include <vector>

#include "Eigen/Core"
#include "absl/status/statusor.h"
#include "dptldm/table.h"
#include "json.hpp"

namespace dptldm {

// Coordinates [offset, offset + width) of one schema column in an encoded row.
struct ColumnBlock {
  size_t offset = 0;
  size_t width = 0;
};

// z-score parameters of a continuous column. A zero-variance column encodes
// to the constant 0 with std recorded as 1 and `degenerate` set.
struct ContinuousStats {
  double mean = 0.0;
  double std = 1.0;
  bool degenerate = false;
};

// Numeric layout of a schema: one standardized coordinate per continuous
// column and a one-hot block per categorical column, in schema order.
class Encoding {
 public:
  Encoding() = default;

  // Learns the standardization from a missing-free dataset (population std).
  static absl::StatusOr<Encoding> Fit(const Dataset& data);

  const TableSchema& schema() const { return schema_; }
  const std::vector<ColumnBlock>& blocks() const { return blocks_; }
  // Indexed by schema column; entries of categorical columns are unused.
  const std::vector<ContinuousStats>& stats() const { return stats_; }
  size_t width() const { return width_; }

  absl::StatusOr<Eigen::MatrixXd> Encode(const Dataset& data) const;
  // Continuous coordinates are de-standardized; categorical blocks decode by
  // argmax with ties going to the lowest index.
  absl::StatusOr<Dataset> Decode(const Eigen::MatrixXd& values) const;

  nlohmann::json ToJson() const;
  static absl::StatusOr<Encoding> FromJson(const nlohmann::json& json);

 private:
  Encoding(TableSchema schema, std::vector<ContinuousStats> stats);

  TableSchema schema_;
  std::vector<ColumnBlock> blocks_;
  std::vector<ContinuousStats> stats_;
  size_t width_ = 0;
};

struct EncodedMatrix {
  Eigen::MatrixXd values;  // N x width, one row per record
  Encoding encoding;
};

// Fits an encoding on `data` and applies it.
absl::StatusOr<EncodedMatrix> Encode(const Dataset& data);
absl::StatusOr<Dataset> Decode(const EncodedMatrix& matrix,
                               const TableSchema& schema);

}  // namespace dptldm

#endif  // DPTLDM_ENCODING_H_
