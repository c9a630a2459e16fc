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

#ifndef DPTLDM_TABLE_H_
#define DPTLDM_TABLE_H_

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"

namespace dptldm {

enum class ColumnKind { kContinuous, kCategorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  // Ordered category labels; empty for continuous columns.
  std::vector<std::string> categories;

  bool is_categorical() const { return kind == ColumnKind::kCategorical; }
  bool operator==(const ColumnSpec&) const = default;
};

// Ordered, validated list of columns. Names are unique and every categorical
// column has at least two distinct categories.
class TableSchema {
 public:
  TableSchema() = default;

  static absl::StatusOr<TableSchema> Create(std::vector<ColumnSpec> columns);

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const ColumnSpec& column(size_t i) const { return columns_[i]; }
  size_t size() const { return columns_.size(); }

  std::optional<size_t> FindColumn(const std::string& name) const;
  std::optional<int> FindCategory(size_t column, const std::string& label) const;

  size_t NumContinuous() const;
  size_t NumCategorical() const;

  // Schema file: {"columns": [{"name", "kind", "categories"?}]}.
  nlohmann::json ToJson() const;
  static absl::StatusOr<TableSchema> FromJson(const nlohmann::json& json);

  bool operator==(const TableSchema&) const = default;

 private:
  explicit TableSchema(std::vector<ColumnSpec> columns)
      : columns_(std::move(columns)) {}

  std::vector<ColumnSpec> columns_;
};

// Column-major table of cells. A continuous cell holds a real number, a
// categorical cell holds its category index stored as a double. Missing cells
// are NaN. Immutable after construction.
class Dataset {
 public:
  Dataset() = default;

  // Validates shapes and category indices. An empty (zero-row) dataset is
  // allowed; loaders reject empty inputs themselves.
  static absl::StatusOr<Dataset> Create(TableSchema schema,
                                        std::vector<std::vector<double>> columns);
  // Zero-row dataset with the given schema.
  static Dataset Empty(TableSchema schema);

  const TableSchema& schema() const { return schema_; }
  size_t num_rows() const { return num_rows_; }
  size_t num_columns() const { return columns_.size(); }

  const std::vector<double>& column(size_t c) const { return columns_[c]; }
  double value(size_t row, size_t c) const { return columns_[c][row]; }
  int category(size_t row, size_t c) const {
    return static_cast<int>(columns_[c][row]);
  }
  bool is_missing(size_t row, size_t c) const {
    return std::isnan(columns_[c][row]);
  }
  bool HasMissing() const;

  // New dataset made of the given rows, in the given order.
  Dataset SelectRows(const std::vector<size_t>& rows) const;
  // Row-wise union; schemas must match.
  static absl::StatusOr<Dataset> Concat(const Dataset& a, const Dataset& b);

  bool operator==(const Dataset& other) const;

 private:
  Dataset(TableSchema schema, std::vector<std::vector<double>> columns,
          size_t num_rows)
      : schema_(std::move(schema)),
        columns_(std::move(columns)),
        num_rows_(num_rows) {}

  TableSchema schema_;
  std::vector<std::vector<double>> columns_;
  size_t num_rows_ = 0;
};

enum class MissingPolicy { kDrop, kImpute };

struct SchemaInferenceOptions {
  // Rows read when inferring; 0 means the whole file.
  size_t sample_limit = 0;
  // A numeric column with at most this many distinct values is categorical.
  size_t categorical_threshold = 20;
};

// Reads a CSV header and cells and classifies each column. Categories are
// sorted lexicographically.
absl::StatusOr<TableSchema> InferSchema(const std::string& path,
                                        const SchemaInferenceOptions& options);

// Loads the schema's columns from a CSV file (extra CSV columns are ignored).
// Missing cells are empty fields or "NA".
absl::StatusOr<Dataset> LoadCsv(const std::string& path,
                                const TableSchema& schema,
                                MissingPolicy policy);

// Same as LoadCsv, from in-memory CSV text.
absl::StatusOr<Dataset> ParseCsv(const std::string& text,
                                 const TableSchema& schema,
                                 MissingPolicy policy);

std::string FormatCsv(const Dataset& data);
absl::Status WriteCsv(const Dataset& data, const std::string& path);

// Shuffles rows with the seed and returns (train, control) with
// floor(N * train_fraction) training rows. Fails if either side is empty.
absl::StatusOr<std::pair<Dataset, Dataset>> Split(const Dataset& data,
                                                  double train_fraction,
                                                  uint64_t seed);

}  // namespace dptldm

#endif  // DPTLDM_TABLE_H_
