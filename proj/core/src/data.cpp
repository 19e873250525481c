#include "kraft/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kraft/error.hpp"
#include "kraft/rng.hpp"

namespace kraft {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool parse_number(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

// true/false, 1/0, yes/no in any letter case.
bool parse_boolean(std::string_view text, double& out) {
  const std::string t = lower(trim(text));
  if (t == "true" || t == "1" || t == "yes") {
    out = 1.0;
    return true;
  }
  if (t == "false" || t == "0" || t == "no") {
    out = 0.0;
    return true;
  }
  return false;
}

bool is_blank(std::string_view cell) { return trim(cell).empty(); }

Column build_column(std::string name, std::vector<std::string> cells, ColumnKind kind, bool strict) {
  Column col;
  col.name = std::move(name);
  col.kind = kind;
  const std::size_t n = cells.size();
  col.values.assign(n, kNaN);
  col.missing.assign(n, 0);

  if (kind == ColumnKind::Categorical) {
    std::set<std::string> levels;
    for (const auto& c : cells)
      if (!is_blank(c)) levels.emplace(c);
    col.levels.assign(levels.begin(), levels.end());
  }

  for (std::size_t i = 0; i < n; ++i) {
    const std::string& cell = cells[i];
    if (is_blank(cell)) {
      col.missing[i] = 1;
      continue;
    }
    double v = 0.0;
    bool ok = true;
    switch (kind) {
      case ColumnKind::Numeric:
        ok = parse_number(cell, v);
        break;
      case ColumnKind::Boolean:
        ok = parse_boolean(cell, v);
        break;
      case ColumnKind::Date: {
        std::int64_t days = 0;
        ok = parse_iso_date(trim(cell), days);
        v = static_cast<double>(days);
        break;
      }
      case ColumnKind::Categorical: {
        const auto it = std::lower_bound(col.levels.begin(), col.levels.end(), cell);
        v = static_cast<double>(it - col.levels.begin());
        break;
      }
    }
    if (!ok) {
      if (strict) {
        throw InputError("column '" + col.name + "': cell '" + cell + "' at row " + std::to_string(i + 1) +
                         " is not " + std::string(to_string(kind)));
      }
      col.missing[i] = 1;
      continue;
    }
    col.values[i] = v;
  }
  col.text = std::move(cells);
  return col;
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Numeric: return "numeric";
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Boolean: return "boolean";
    case ColumnKind::Date: return "date";
  }
  return "?";
}

std::string_view to_string(Task task) {
  return task == Task::Classification ? "classification" : "regression";
}

ColumnKind parse_column_kind(std::string_view text) {
  const std::string t = lower(text);
  if (t == "numeric") return ColumnKind::Numeric;
  if (t == "categorical") return ColumnKind::Categorical;
  if (t == "boolean") return ColumnKind::Boolean;
  if (t == "date") return ColumnKind::Date;
  throw InputError("unknown column kind '" + std::string(text) + "'");
}

Task parse_task(std::string_view text) {
  const std::string t = lower(text);
  if (t == "classification") return Task::Classification;
  if (t == "regression") return Task::Regression;
  throw InputError("unknown task '" + std::string(text) + "'");
}

std::size_t Column::missing_count() const {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
}

bool parse_iso_date(std::string_view text, std::int64_t& days) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc{} && ptr == text.data() + pos + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return false;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return false;
  days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return true;
}

ColumnKind infer_kind(std::span<const std::string> cells) {
  std::set<std::string> distinct;
  bool any = false, all_bool = true, all_number = true, all_date = true;
  for (const auto& cell : cells) {
    if (is_blank(cell)) continue;
    any = true;
    double v = 0.0;
    std::int64_t days = 0;
    if (all_bool) {
      if (parse_boolean(cell, v)) {
        distinct.insert(lower(trim(cell)));
      } else {
        all_bool = false;
      }
    }
    if (all_number && !parse_number(cell, v)) all_number = false;
    if (all_date && !parse_iso_date(trim(cell), days)) all_date = false;
  }
  if (!any) return ColumnKind::Categorical;
  if (all_bool && distinct.size() <= 2) return ColumnKind::Boolean;
  if (all_number) return ColumnKind::Numeric;
  if (all_date) return ColumnKind::Date;
  return ColumnKind::Categorical;
}

Dataset::Dataset(std::vector<Column> columns, std::string target, Task task)
    : columns_(std::move(columns)), task_(task) {
  if (columns_.empty()) throw InputError("dataset has no columns");
  n_rows_ = columns_.front().size();
  if (n_rows_ == 0) throw InputError("dataset has zero data rows");
  std::set<std::string> names;
  for (const auto& c : columns_) {
    if (c.size() != n_rows_ || c.missing.size() != n_rows_)
      throw InputError("column '" + c.name + "' has a different row count");
    if (!names.insert(c.name).second) throw InputError("duplicate column name '" + c.name + "'");
  }
  const auto it = std::find_if(columns_.begin(), columns_.end(), [&](const Column& c) { return c.name == target; });
  if (it == columns_.end()) throw InputError("target column '" + target + "' not found");
  target_index_ = static_cast<std::size_t>(it - columns_.begin());

  const Column& t = columns_[target_index_];
  if (t.missing_count() != 0) throw InputError("target column '" + target + "' has missing values");
  if (task == Task::Regression) {
    if (t.kind != ColumnKind::Numeric) throw InputError("regression target '" + target + "' must be numeric");
    target_values_ = t.values;
  } else {
    if (t.kind == ColumnKind::Boolean) {
      class_labels_ = {"false", "true"};
    } else if (t.kind == ColumnKind::Categorical) {
      class_labels_ = t.levels;
    } else {
      throw InputError("classification target '" + target + "' must be categorical or boolean");
    }
    target_values_ = t.values;
  }
}

const Column* Dataset::find(std::string_view name) const {
  for (const auto& c : columns_)
    if (c.name == name) return &c;
  return nullptr;
}

const Column& Dataset::column(std::string_view name) const {
  if (const Column* c = find(name)) return *c;
  throw InputError("unknown column '" + std::string(name) + "'");
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (i != target_index_) out.push_back(columns_[i].name);
  return out;
}

SchemaConfig parse_schema(std::string_view json_text, const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("schema: ") + e.what());
  }
  SchemaConfig schema;
  if (!doc.contains("target") || !doc["target"].is_string()) throw InputError("schema: missing string field 'target'");
  schema.target_name = doc["target"].get<std::string>();
  schema.task = parse_task(doc.value("task", std::string("classification")));
  if (doc.contains("overrides")) {
    for (const auto& [name, kind] : doc["overrides"].items())
      schema.column_kind_overrides[name] = parse_column_kind(kind.get<std::string>());
  }
  if (doc.contains("concept_map") && doc["concept_map"].is_string()) {
    std::filesystem::path p = doc["concept_map"].get<std::string>();
    schema.concept_map_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  return schema;
}

SchemaConfig load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open schema file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str(), path.parent_path());
}

Dataset parse_csv(std::istream& in, const SchemaConfig& schema) {
  auto records = read_csv_records(in);
  if (records.empty()) throw InputError("csv: missing header row");
  const auto& header = records.front();
  std::set<std::string> seen;
  for (const auto& h : header)
    if (!seen.insert(h).second) throw InputError("csv: duplicate header '" + h + "'");
  if (records.size() < 2) throw InputError("csv: zero data rows");
  if (!seen.count(schema.target_name)) throw InputError("csv: target column '" + schema.target_name + "' not found");
  for (const auto& [name, kind] : schema.column_kind_overrides)
    if (!seen.count(name)) throw InputError("schema override references unknown column '" + name + "'");

  const std::size_t n_cols = header.size();
  const std::size_t n_rows = records.size() - 1;
  std::vector<std::vector<std::string>> cells(n_cols, std::vector<std::string>(n_rows));
  for (std::size_t r = 0; r < n_rows; ++r) {
    auto& rec = records[r + 1];
    if (rec.size() != n_cols)
      throw InputError("csv: row " + std::to_string(r + 1) + " has " + std::to_string(rec.size()) + " fields, expected " +
                       std::to_string(n_cols));
    for (std::size_t c = 0; c < n_cols; ++c) cells[c][r] = std::move(rec[c]);
  }

  std::vector<Column> columns;
  columns.reserve(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    const std::string& name = header[c];
    const auto ov = schema.column_kind_overrides.find(name);
    ColumnKind kind;
    bool strict = false;
    if (ov != schema.column_kind_overrides.end()) {
      kind = ov->second;
      strict = true;
    } else {
      kind = infer_kind(cells[c]);
      // Integer-coded class labels are read as numbers; a classification
      // target needs them as labels.
      if (name == schema.target_name && schema.task == Task::Classification && kind == ColumnKind::Numeric)
        kind = ColumnKind::Categorical;
    }
    columns.push_back(build_column(name, std::move(cells[c]), kind, strict));
  }
  return Dataset(std::move(columns), schema.target_name, schema.task);
}

Dataset load_csv(const std::filesystem::path& path, const SchemaConfig& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset '" + path.string() + "'");
  return parse_csv(in, schema);
}

std::vector<Fold> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed, std::span<const int> strata) {
  if (k < 2) throw InputError("k-fold needs k >= 2");
  if (k > n) throw InputError("k-fold: k=" + std::to_string(k) + " exceeds row count " + std::to_string(n));
  if (!strata.empty() && strata.size() != n) throw std::invalid_argument("kfold_indices: strata length mismatch");

  Rng rng(derive_seed(seed, 0x6b666f6c64ULL));
  std::vector<std::size_t> order;
  order.reserve(n);
  if (strata.empty()) {
    for (std::size_t i = 0; i < n; ++i) order.push_back(i);
    rng.shuffle(order.begin(), order.end());
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[strata[i]].push_back(i);
    for (auto& [label, rows] : by_class) {
      rng.shuffle(rows.begin(), rows.end());
      order.insert(order.end(), rows.begin(), rows.end());
    }
  }

  std::vector<std::vector<std::size_t>> valid(k);
  for (std::size_t pos = 0; pos < n; ++pos) valid[pos % k].push_back(order[pos]);

  std::vector<Fold> folds(k);
  std::vector<std::uint8_t> in_valid(n);
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(valid[f].begin(), valid[f].end());
    std::fill(in_valid.begin(), in_valid.end(), 0);
    for (std::size_t i : valid[f]) in_valid[i] = 1;
    folds[f].valid = std::move(valid[f]);
    for (std::size_t i = 0; i < n; ++i)
      if (!in_valid[i]) folds[f].train.push_back(i);
  }
  return folds;
}

std::vector<Fold> split_kfold(const Dataset& d, std::size_t k, std::uint64_t seed, bool stratified) {
  if (!stratified) return kfold_indices(d.n_rows(), k, seed);
  if (d.task() != Task::Classification) throw InputError("stratified k-fold requires a classification task");
  std::vector<int> strata(d.n_rows());
  std::transform(d.target_values().begin(), d.target_values().end(), strata.begin(),
                 [](double v) { return static_cast<int>(v); });
  return kfold_indices(d.n_rows(), k, seed, strata);
}

}  // namespace kraft
