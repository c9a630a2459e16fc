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

#include "dptldm/encoding.h"

#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptldm/status_macros.h"

namespace dptldm {

Encoding::Encoding(TableSchema schema, std::vector<ContinuousStats> stats)
    : schema_(std::move(schema)), stats_(std::move(stats)) {
  size_t offset = 0;
  for (const ColumnSpec& spec : schema_.columns()) {
    const size_t width = spec.is_categorical() ? spec.categories.size() : 1;
    blocks_.push_back({offset, width});
    offset += width;
  }
  width_ = offset;
}

absl::StatusOr<Encoding> Encoding::Fit(const Dataset& data) {
  if (data.HasMissing()) {
    return absl::InvalidArgumentError("encode: dataset has missing cells");
  }
  if (data.num_rows() == 0) {
    return absl::InvalidArgumentError("encode: dataset is empty");
  }
  const TableSchema& schema = data.schema();
  std::vector<ContinuousStats> stats(schema.size());
  const double n = static_cast<double>(data.num_rows());
  for (size_t c = 0; c < schema.size(); ++c) {
    if (schema.column(c).is_categorical()) continue;
    double sum = 0.0;
    for (double v : data.column(c)) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : data.column(c)) ss += (v - mean) * (v - mean);
    const double std = std::sqrt(ss / n);
    stats[c].mean = mean;
    if (std > 0.0) {
      stats[c].std = std;
    } else {
      stats[c].std = 1.0;
      stats[c].degenerate = true;
    }
  }
  return Encoding(schema, std::move(stats));
}

absl::StatusOr<Eigen::MatrixXd> Encoding::Encode(const Dataset& data) const {
  if (!(data.schema() == schema_)) {
    return absl::InvalidArgumentError("encode: schema mismatch");
  }
  if (data.HasMissing()) {
    return absl::InvalidArgumentError("encode: dataset has missing cells");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(data.num_rows(), width_);
  for (size_t c = 0; c < schema_.size(); ++c) {
    const ColumnBlock& block = blocks_[c];
    const std::vector<double>& col = data.column(c);
    if (schema_.column(c).is_categorical()) {
      for (size_t r = 0; r < col.size(); ++r) {
        out(r, block.offset + static_cast<size_t>(col[r])) = 1.0;
      }
    } else {
      const ContinuousStats& s = stats_[c];
      for (size_t r = 0; r < col.size(); ++r) {
        out(r, block.offset) = s.degenerate ? 0.0 : (col[r] - s.mean) / s.std;
      }
    }
  }
  return out;
}

absl::StatusOr<Dataset> Encoding::Decode(const Eigen::MatrixXd& values) const {
  if (static_cast<size_t>(values.cols()) != width_) {
    return absl::InvalidArgumentError(absl::StrCat(
        "decode: matrix has ", values.cols(), " columns, layout needs ", width_));
  }
  const size_t n = values.rows();
  std::vector<std::vector<double>> columns(schema_.size(),
                                           std::vector<double>(n));
  for (size_t c = 0; c < schema_.size(); ++c) {
    const ColumnBlock& block = blocks_[c];
    if (schema_.column(c).is_categorical()) {
      for (size_t r = 0; r < n; ++r) {
        size_t best = 0;
        for (size_t k = 1; k < block.width; ++k) {
          if (values(r, block.offset + k) > values(r, block.offset + best)) {
            best = k;
          }
        }
        columns[c][r] = static_cast<double>(best);
      }
    } else {
      const ContinuousStats& s = stats_[c];
      for (size_t r = 0; r < n; ++r) {
        columns[c][r] = s.degenerate ? s.mean
                                     : values(r, block.offset) * s.std + s.mean;
      }
    }
  }
  return Dataset::Create(schema_, std::move(columns));
}

nlohmann::json Encoding::ToJson() const {
  nlohmann::json stats = nlohmann::json::array();
  for (size_t c = 0; c < schema_.size(); ++c) {
    if (schema_.column(c).is_categorical()) {
      stats.push_back(nullptr);
    } else {
      stats.push_back({{"mean", stats_[c].mean},
                       {"std", stats_[c].std},
                       {"degenerate", stats_[c].degenerate}});
    }
  }
  return {{"schema", schema_.ToJson()}, {"stats", std::move(stats)}};
}

absl::StatusOr<Encoding> Encoding::FromJson(const nlohmann::json& json) {
  if (!json.contains("schema") || !json.contains("stats")) {
    return absl::InvalidArgumentError("encoding: missing schema or stats");
  }
  ASSIGN_OR_RETURN(TableSchema schema, TableSchema::FromJson(json["schema"]));
  const auto& stats_json = json["stats"];
  if (!stats_json.is_array() || stats_json.size() != schema.size()) {
    return absl::InvalidArgumentError("encoding: stats do not match schema");
  }
  std::vector<ContinuousStats> stats(schema.size());
  for (size_t c = 0; c < schema.size(); ++c) {
    if (schema.column(c).is_categorical()) continue;
    const auto& s = stats_json[c];
    if (!s.is_object()) {
      return absl::InvalidArgumentError("encoding: malformed stats entry");
    }
    stats[c].mean = s.at("mean").get<double>();
    stats[c].std = s.at("std").get<double>();
    stats[c].degenerate = s.at("degenerate").get<bool>();
  }
  return Encoding(std::move(schema), std::move(stats));
}

absl::StatusOr<EncodedMatrix> Encode(const Dataset& data) {
  ASSIGN_OR_RETURN(Encoding encoding, Encoding::Fit(data));
  ASSIGN_OR_RETURN(Eigen::MatrixXd values, encoding.Encode(data));
  return EncodedMatrix{std::move(values), std::move(encoding)};
}

absl::StatusOr<Dataset> Decode(const EncodedMatrix& matrix,
                               const TableSchema& schema) {
  if (!(matrix.encoding.schema() == schema)) {
    return absl::InvalidArgumentError("decode: layout does not match schema");
  }
  return matrix.encoding.Decode(matrix.values);
}

}  // namespace dptldm
