#ifndef ACWB_DATA_HPP_
#define ACWB_DATA_HPP_

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acwb/common.hpp"

namespace acwb {

enum class ColumnKind { numeric, categorical };
enum class Task { regression, binary_classification, multiclass_classification };

std::string to_string(ColumnKind kind);
std::string to_string(Task task);
ColumnKind column_kind_from_string(std::string_view s);
Task task_from_string(std::string_view s);

// Code used in categorical columns for a missing cell.
inline constexpr std::int32_t kMissingCode = -1;

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  // Categorical only: level names in order of first appearance.
  std::vector<std::string> levels;
  std::size_t missing_count = 0;
};

// One feature column. Exactly one of `numeric` / `codes` is populated,
// depending on schema.kind. Missing numeric cells are NaN.
struct Column {
  ColumnSchema schema;
  Vector numeric;
  std::vector<std::int32_t> codes;

  bool is_numeric() const { return schema.kind == ColumnKind::numeric; }
  Index size() const;
  bool is_missing(Index row) const;
};

struct TargetInfo {
  std::string name;
  Task task = Task::regression;
  // Classification only: class labels; the target vector stores indices.
  std::vector<std::string> levels;
};

// Typed in-memory table. Value type; treated as immutable once built.
class Dataset {
 public:
  std::vector<Column> columns;
  TargetInfo target_info;
  // Regression values or class indices. Empty when the source had no target.
  Vector target;

  Index n_rows() const;
  Index n_features() const { return static_cast<Index>(columns.size()); }
  bool has_target() const { return target.size() > 0 || n_rows() == 0; }
  Task task() const { return target_info.task; }

  std::optional<Index> find_column(std::string_view name) const;
  std::vector<ColumnSchema> schema() const;

  // New dataset holding the given rows, in the given order.
  Dataset take(std::span<const Index> rows) const;

  // Throws DataError when column lengths disagree or codes are out of range.
  void validate() const;
};

enum class LoadErrorKind { missing_file, missing_target, ragged_row, no_rows, schema_mismatch, malformed };

class LoadError : public DataError {
 public:
  LoadError(LoadErrorKind kind, const std::string& what) : DataError(what), kind_(kind) {}
  LoadErrorKind kind() const { return kind_; }

 private:
  LoadErrorKind kind_;
};

struct CsvOptions {
  std::string target;
  // Empty means auto-detect from the target column.
  std::optional<Task> task;
  // Extra cell values treated as missing besides "" and "NA".
  std::vector<std::string> na_strings;
  // Forces column kinds by name; a numeric-hinted column with a non-numeric
  // cell is a schema_mismatch error.
  std::map<std::string, ColumnKind> kind_hints;
  // When false a missing target column yields an empty target instead of an error.
  bool require_target = true;
  // When true a header-only file is accepted and yields an empty dataset.
  bool allow_empty = false;
};

// RFC-4180 reader: quoted fields, doubled quotes, CRLF and embedded newlines.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

Dataset load_csv(const std::string& path, const CsvOptions& options);
Dataset read_csv(std::istream& in, const CsvOptions& options);

// Writes features followed by the target column (if any). Numbers use 17
// significant digits; missing cells are written as NA.
void write_csv(const Dataset& ds, const std::string& path);
void write_csv(const Dataset& ds, std::ostream& out);

std::string format_double(double v);
std::string csv_escape(const std::string& field);

struct SplitSpec {
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  bool stratify = true;
};

struct SplitResult {
  Dataset train;
  Dataset validation;
  std::vector<Index> train_rows;
  std::vector<Index> validation_rows;
  // Set when stratification was requested but impossible (a class with a single row).
  bool stratification_fallback = false;
};

SplitResult split(const Dataset& ds, const SplitSpec& spec);

// Rows drawn without replacement, floor(fraction * n) of them, stratified by
// class for classification targets. Original row order is preserved.
Dataset subsample(const Dataset& ds, double fraction, std::uint64_t seed);
std::vector<Index> subsample_rows(const Dataset& ds, double fraction, std::uint64_t seed);

// Per-class row indices; empty outer vector for regression.
std::vector<std::vector<Index>> rows_by_class(const Dataset& ds);

}  // namespace acwb

#endif  // ACWB_DATA_HPP_
