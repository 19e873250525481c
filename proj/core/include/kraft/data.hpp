#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kraft {

enum class ColumnKind { Numeric, Categorical, Boolean, Date };
enum class Task { Classification, Regression };

std::string_view to_string(ColumnKind kind);
std::string_view to_string(Task task);
ColumnKind parse_column_kind(std::string_view text);
Task parse_task(std::string_view text);

/// One typed column. `values` holds the number for Numeric cells, 0/1 for
/// Boolean, days since 1970-01-01 for Date and the index into `levels` for
/// Categorical. Missing cells carry NaN and a set flag; `text` keeps the cell
/// as it appeared in the file.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  std::vector<double> values;
  std::vector<std::uint8_t> missing;
  std::vector<std::string> text;
  std::vector<std::string> levels;

  std::size_t size() const { return values.size(); }
  bool is_missing(std::size_t row) const { return missing[row] != 0; }
  std::size_t missing_count() const;
};

/// Immutable after construction; the constructor enforces the target and
/// row-count invariants.
class Dataset {
 public:
  Dataset(std::vector<Column> columns, std::string target, Task task);

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::string_view name) const;
  const Column* find(std::string_view name) const;
  const Column& target() const { return columns_[target_index_]; }
  const std::string& target_name() const { return target().name; }
  Task task() const { return task_; }
  std::size_t n_rows() const { return n_rows_; }

  /// Non-target column names in file order.
  std::vector<std::string> feature_names() const;

  /// Regression: the numeric target. Classification: class codes 0..C-1.
  const std::vector<double>& target_values() const { return target_values_; }
  /// Class labels in code order; empty for regression.
  const std::vector<std::string>& class_labels() const { return class_labels_; }
  int n_classes() const { return static_cast<int>(class_labels_.size()); }

 private:
  std::vector<Column> columns_;
  std::size_t target_index_ = 0;
  Task task_;
  std::size_t n_rows_ = 0;
  std::vector<double> target_values_;
  std::vector<std::string> class_labels_;
};

struct SchemaConfig {
  std::string target_name;
  Task task = Task::Classification;
  std::map<std::string, ColumnKind> column_kind_overrides;
  std::filesystem::path concept_map_path;  // empty when absent
};

/// Parses a schema document; a relative concept-map path is resolved
/// against `base_dir`.
SchemaConfig parse_schema(std::string_view json_text, const std::filesystem::path& base_dir = {});
SchemaConfig load_schema(const std::filesystem::path& path);

/// RFC-4180 reader: quoted fields, doubled quotes, embedded separators and
/// line breaks, CRLF or LF records.
std::vector<std::vector<std::string>> read_csv_records(std::istream& in);

/// Quotes a field when it contains a separator, quote or line break.
std::string csv_escape(std::string_view field);

Dataset parse_csv(std::istream& in, const SchemaConfig& schema);
Dataset load_csv(const std::filesystem::path& path, const SchemaConfig& schema);

/// Kind assigned to a column of raw cells when no override is given.
ColumnKind infer_kind(std::span<const std::string> cells);

/// Days since 1970-01-01 for an ISO-8601 calendar date (YYYY-MM-DD).
bool parse_iso_date(std::string_view text, std::int64_t& days);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

/// k folds over n rows. When `strata` is non-empty each stratum is spread
/// round-robin over the folds so class proportions hold to within one row.
std::vector<Fold> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed,
                                std::span<const int> strata = {});

std::vector<Fold> split_kfold(const Dataset& d, std::size_t k, std::uint64_t seed, bool stratified);

}  // namespace kraft
