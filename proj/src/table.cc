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

#include "dptldm/table.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptldm/random.h"
#include "dptldm/status_macros.h"

namespace dptldm {
namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

using Record = std::vector<std::string>;

// RFC-4180 records: quoted fields may contain separators, doubled quotes and
// line breaks. A trailing CR before LF is dropped.
absl::StatusOr<std::vector<Record>> ParseRecords(const std::string& text,
                                                 size_t max_records) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  size_t i = 0;
  auto end_record = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
    // Skip blank lines.
    if (!(current.size() == 1 && current[0].empty())) {
      records.push_back(std::move(current));
    }
    current.clear();
  };
  while (i < text.size()) {
    if (max_records != 0 && records.size() >= max_records) break;
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      current.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // Dropped; only meaningful as part of CRLF.
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) {
    return absl::InvalidArgumentError("CSV: unterminated quoted field");
  }
  if (!field.empty() || !current.empty()) end_record();
  return records;
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) return absl::DataLossError(absl::StrCat("read error: ", path));
  return buffer.str();
}

absl::StatusOr<std::vector<Record>> ReadRecords(const std::string& text,
                                                size_t max_records) {
  ASSIGN_OR_RETURN(std::vector<Record> records, ParseRecords(text, max_records));
  if (records.empty()) return absl::InvalidArgumentError("CSV: empty file");
  const size_t width = records.front().size();
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      return absl::InvalidArgumentError(
          absl::StrCat("CSV: ragged row ", r, " has ", records[r].size(),
                       " fields, header has ", width));
    }
  }
  return records;
}

bool IsMissingToken(const std::string& token) {
  return token.empty() || token == "NA";
}

std::optional<double> ParseNumber(const std::string& token) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string FormatNumber(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::string QuoteField(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

absl::StatusOr<TableSchema> TableSchema::Create(std::vector<ColumnSpec> columns) {
  std::set<std::string> names;
  for (const ColumnSpec& spec : columns) {
    if (!names.insert(spec.name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate column name: ", spec.name));
    }
    if (spec.is_categorical()) {
      if (spec.categories.size() < 2) {
        return absl::InvalidArgumentError(absl::StrCat(
            "categorical column ", spec.name, " needs at least 2 categories"));
      }
      std::set<std::string> labels(spec.categories.begin(),
                                   spec.categories.end());
      if (labels.size() != spec.categories.size()) {
        return absl::InvalidArgumentError(
            absl::StrCat("categorical column ", spec.name,
                         " has duplicate categories"));
      }
    } else if (!spec.categories.empty()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "continuous column ", spec.name, " must not list categories"));
    }
  }
  return TableSchema(std::move(columns));
}

std::optional<size_t> TableSchema::FindColumn(const std::string& name) const {
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<int> TableSchema::FindCategory(size_t column,
                                             const std::string& label) const {
  const auto& cats = columns_[column].categories;
  const auto it = std::find(cats.begin(), cats.end(), label);
  if (it == cats.end()) return std::nullopt;
  return static_cast<int>(it - cats.begin());
}

size_t TableSchema::NumContinuous() const {
  return std::count_if(columns_.begin(), columns_.end(),
                       [](const ColumnSpec& c) { return !c.is_categorical(); });
}

size_t TableSchema::NumCategorical() const {
  return columns_.size() - NumContinuous();
}

nlohmann::json TableSchema::ToJson() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const ColumnSpec& spec : columns_) {
    nlohmann::json col = {{"name", spec.name},
                          {"kind", spec.is_categorical() ? "categorical"
                                                         : "continuous"}};
    if (spec.is_categorical()) col["categories"] = spec.categories;
    cols.push_back(std::move(col));
  }
  return {{"columns", std::move(cols)}};
}

absl::StatusOr<TableSchema> TableSchema::FromJson(const nlohmann::json& json) {
  if (!json.is_object() || !json.contains("columns") ||
      !json["columns"].is_array()) {
    return absl::InvalidArgumentError("schema: expected {\"columns\": [...]}");
  }
  std::vector<ColumnSpec> columns;
  for (const auto& col : json["columns"]) {
    if (!col.is_object() || !col.contains("name") || !col["name"].is_string() ||
        !col.contains("kind") || !col["kind"].is_string()) {
      return absl::InvalidArgumentError("schema: column needs name and kind");
    }
    ColumnSpec spec;
    spec.name = col["name"].get<std::string>();
    const std::string kind = col["kind"].get<std::string>();
    if (kind == "continuous") {
      spec.kind = ColumnKind::kContinuous;
    } else if (kind == "categorical") {
      spec.kind = ColumnKind::kCategorical;
      if (!col.contains("categories") || !col["categories"].is_array()) {
        return absl::InvalidArgumentError(
            absl::StrCat("schema: column ", spec.name, " lacks categories"));
      }
      for (const auto& label : col["categories"]) {
        if (!label.is_string()) {
          return absl::InvalidArgumentError("schema: categories must be strings");
        }
        spec.categories.push_back(label.get<std::string>());
      }
    } else {
      return absl::InvalidArgumentError(absl::StrCat("schema: unknown kind ", kind));
    }
    columns.push_back(std::move(spec));
  }
  return Create(std::move(columns));
}

absl::StatusOr<Dataset> Dataset::Create(TableSchema schema,
                                        std::vector<std::vector<double>> columns) {
  if (columns.size() != schema.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dataset has ", columns.size(), " columns, schema has ", schema.size()));
  }
  const size_t rows = columns.empty() ? 0 : columns.front().size();
  for (size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != rows) {
      return absl::InvalidArgumentError("dataset columns differ in length");
    }
    const ColumnSpec& spec = schema.column(c);
    for (double v : columns[c]) {
      if (std::isnan(v)) continue;
      if (std::isinf(v)) {
        return absl::InvalidArgumentError(
            absl::StrCat("non-finite value in column ", spec.name));
      }
      if (spec.is_categorical()) {
        if (v < 0 || v != std::floor(v) ||
            v >= static_cast<double>(spec.categories.size())) {
          return absl::InvalidArgumentError(absl::StrCat(
              "invalid category index ", v, " in column ", spec.name));
        }
      }
    }
  }
  return Dataset(std::move(schema), std::move(columns), rows);
}

Dataset Dataset::Empty(TableSchema schema) {
  std::vector<std::vector<double>> columns(schema.size());
  return Dataset(std::move(schema), std::move(columns), 0);
}

bool Dataset::HasMissing() const {
  for (const auto& col : columns_) {
    for (double v : col) {
      if (std::isnan(v)) return true;
    }
  }
  return false;
}

Dataset Dataset::SelectRows(const std::vector<size_t>& rows) const {
  std::vector<std::vector<double>> columns(columns_.size());
  for (size_t c = 0; c < columns_.size(); ++c) {
    columns[c].reserve(rows.size());
    for (size_t r : rows) columns[c].push_back(columns_[c][r]);
  }
  return Dataset(schema_, std::move(columns), rows.size());
}

absl::StatusOr<Dataset> Dataset::Concat(const Dataset& a, const Dataset& b) {
  if (!(a.schema() == b.schema())) {
    return absl::InvalidArgumentError("concat: schema mismatch");
  }
  std::vector<std::vector<double>> columns = a.columns_;
  for (size_t c = 0; c < columns.size(); ++c) {
    columns[c].insert(columns[c].end(), b.columns_[c].begin(),
                      b.columns_[c].end());
  }
  return Dataset(a.schema_, std::move(columns), a.num_rows_ + b.num_rows_);
}

bool Dataset::operator==(const Dataset& other) const {
  if (!(schema_ == other.schema_) || num_rows_ != other.num_rows_) return false;
  for (size_t c = 0; c < columns_.size(); ++c) {
    for (size_t r = 0; r < num_rows_; ++r) {
      const double x = columns_[c][r];
      const double y = other.columns_[c][r];
      if (std::isnan(x) != std::isnan(y)) return false;
      if (!std::isnan(x) && x != y) return false;
    }
  }
  return true;
}

absl::StatusOr<TableSchema> InferSchema(const std::string& path,
                                        const SchemaInferenceOptions& options) {
  ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  const size_t max_records =
      options.sample_limit == 0 ? 0 : options.sample_limit + 1;
  ASSIGN_OR_RETURN(std::vector<Record> records, ReadRecords(text, max_records));
  const Record& header = records.front();
  std::vector<ColumnSpec> columns;
  for (size_t c = 0; c < header.size(); ++c) {
    std::set<std::string> distinct;
    bool numeric = true;
    for (size_t r = 1; r < records.size(); ++r) {
      const std::string& token = records[r][c];
      if (IsMissingToken(token)) continue;
      distinct.insert(token);
      if (numeric && !ParseNumber(token).has_value()) numeric = false;
    }
    ColumnSpec spec;
    spec.name = header[c];
    if (!numeric || distinct.size() <= options.categorical_threshold) {
      spec.kind = ColumnKind::kCategorical;
      spec.categories.assign(distinct.begin(), distinct.end());
      if (spec.categories.size() < 2) {
        return absl::InvalidArgumentError(absl::StrCat(
            "column ", spec.name, " has fewer than 2 distinct values"));
      }
    }
    columns.push_back(std::move(spec));
  }
  return TableSchema::Create(std::move(columns));
}

absl::StatusOr<Dataset> ParseCsv(const std::string& text,
                                 const TableSchema& schema,
                                 MissingPolicy policy) {
  ASSIGN_OR_RETURN(std::vector<Record> records, ReadRecords(text, 0));
  const Record& header = records.front();
  std::vector<size_t> source(schema.size());
  for (size_t c = 0; c < schema.size(); ++c) {
    const auto it =
        std::find(header.begin(), header.end(), schema.column(c).name);
    if (it == header.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("CSV lacks column ", schema.column(c).name));
    }
    source[c] = it - header.begin();
  }
  const size_t n = records.size() - 1;
  std::vector<std::vector<double>> columns(schema.size(),
                                           std::vector<double>(n, kMissing));
  for (size_t r = 0; r < n; ++r) {
    const Record& record = records[r + 1];
    for (size_t c = 0; c < schema.size(); ++c) {
      const std::string& token = record[source[c]];
      if (IsMissingToken(token)) continue;
      const ColumnSpec& spec = schema.column(c);
      if (spec.is_categorical()) {
        const std::optional<int> index = schema.FindCategory(c, token);
        if (!index) {
          return absl::InvalidArgumentError(absl::StrCat(
              "unknown category '", token, "' in column ", spec.name,
              " (row ", r + 1, ")"));
        }
        columns[c][r] = *index;
      } else {
        const std::optional<double> value = ParseNumber(token);
        if (!value) {
          return absl::InvalidArgumentError(absl::StrCat(
              "cannot parse '", token, "' as a number in column ", spec.name,
              " (row ", r + 1, ")"));
        }
        columns[c][r] = *value;
      }
    }
  }

  if (policy == MissingPolicy::kDrop) {
    std::vector<size_t> keep;
    for (size_t r = 0; r < n; ++r) {
      bool complete = true;
      for (const auto& col : columns) complete = complete && !std::isnan(col[r]);
      if (complete) keep.push_back(r);
    }
    for (auto& col : columns) {
      std::vector<double> kept;
      kept.reserve(keep.size());
      for (size_t r : keep) kept.push_back(col[r]);
      col = std::move(kept);
    }
  } else {
    for (size_t c = 0; c < schema.size(); ++c) {
      std::vector<double> present;
      for (double v : columns[c]) {
        if (!std::isnan(v)) present.push_back(v);
      }
      if (present.size() == columns[c].size()) continue;
      if (present.empty()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "cannot impute column ", schema.column(c).name,
            ": every value is missing"));
      }
      double fill;
      if (schema.column(c).is_categorical()) {
        // Mode; ties go to the lowest category index.
        std::map<double, size_t> counts;
        for (double v : present) ++counts[v];
        fill = counts.begin()->first;
        size_t best = 0;
        for (const auto& [v, count] : counts) {
          if (count > best) {
            best = count;
            fill = v;
          }
        }
      } else {
        fill = Median(std::move(present));
      }
      for (double& v : columns[c]) {
        if (std::isnan(v)) v = fill;
      }
    }
  }

  ASSIGN_OR_RETURN(Dataset data, Dataset::Create(schema, std::move(columns)));
  if (data.num_rows() == 0) {
    return absl::InvalidArgumentError("CSV has no complete data rows");
  }
  return data;
}

absl::StatusOr<Dataset> LoadCsv(const std::string& path,
                                const TableSchema& schema,
                                MissingPolicy policy) {
  ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  return ParseCsv(text, schema, policy);
}

std::string FormatCsv(const Dataset& data) {
  const TableSchema& schema = data.schema();
  std::string out;
  for (size_t c = 0; c < schema.size(); ++c) {
    if (c > 0) out.push_back(',');
    out += QuoteField(schema.column(c).name);
  }
  out.push_back('\n');
  for (size_t r = 0; r < data.num_rows(); ++r) {
    for (size_t c = 0; c < schema.size(); ++c) {
      if (c > 0) out.push_back(',');
      if (data.is_missing(r, c)) continue;
      const ColumnSpec& spec = schema.column(c);
      out += spec.is_categorical()
                 ? QuoteField(spec.categories[data.category(r, c)])
                 : FormatNumber(data.value(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

absl::Status WriteCsv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::PermissionDeniedError(absl::StrCat("cannot write ", path));
  out << FormatCsv(data);
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::StatusOr<std::pair<Dataset, Dataset>> Split(const Dataset& data,
                                                  double train_fraction,
                                                  uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    return absl::InvalidArgumentError("train_fraction must lie in (0, 1)");
  }
  const size_t n = data.num_rows();
  const size_t n_train =
      static_cast<size_t>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train < 1 || n - n_train < 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "split of ", n, " rows at ", train_fraction,
        " leaves an empty partition"));
  }
  Rng rng(seed);
  std::vector<size_t> perm = rng.Permutation(n);
  std::vector<size_t> train(perm.begin(), perm.begin() + n_train);
  std::vector<size_t> control(perm.begin() + n_train, perm.end());
  return std::make_pair(data.SelectRows(train), data.SelectRows(control));
}

}  // namespace dptldm
