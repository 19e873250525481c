#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "kraft/data.hpp"
#include "kraft/error.hpp"
#include "kraft/rng.hpp"

namespace kraft {
namespace {

using testing::csv_dataset;

void expect_partition(const std::vector<Fold>& folds, std::size_t n) {
  std::vector<int> hits(n, 0);
  for (const auto& f : folds) {
    EXPECT_EQ(f.train.size() + f.valid.size(), n);
    std::set<std::size_t> valid(f.valid.begin(), f.valid.end());
    for (std::size_t i : f.valid) ++hits[i];
    for (std::size_t i : f.train) EXPECT_FALSE(valid.count(i));
  }
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(hits[i], 1) << "row " << i;
}

TEST(Csv, QuotedFieldsAndLineBreaks) {
  std::istringstream in("a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\n\"two\nlines\",z\n");
  const auto rec = read_csv_records(in);
  ASSERT_EQ(rec.size(), 3u);
  EXPECT_EQ(rec[1][0], "x, y");
  EXPECT_EQ(rec[1][1], "say \"hi\"");
  EXPECT_EQ(rec[2][0], "two\nlines");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("plain"), "plain");
}

TEST(Csv, EscapeRoundTrips) {
  const std::vector<std::string> fields = {"", "q\"uote", "new\nline", "c,omma", "plain"};
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_escape(fields[i]);
  std::istringstream in(line + "\n");
  const auto rec = read_csv_records(in);
  ASSERT_EQ(rec.size(), 1u);
  EXPECT_EQ(rec[0], fields);
}

TEST(LoadCsv, RowCountOfDiabetesShapedFile) {
  std::ostringstream csv;
  csv << "Pregnancies,Glucose,BloodPressure,SkinThickness,Insulin,BMI,DiabetesPedigreeFunction,Age,Outcome\n";
  for (int r = 0; r < 768; ++r) csv << r % 7 << ",120,70,20,80,31.5,0.4," << 21 + r % 50 << "," << r % 2 << "\n";
  const Dataset d = csv_dataset(csv.str(), "Outcome", Task::Classification);
  EXPECT_EQ(d.n_rows(), 768u);
  EXPECT_EQ(d.feature_names().size(), 8u);
  EXPECT_EQ(d.n_classes(), 2);
}

TEST(LoadCsv, AllEmptyColumnUnderNumericOverride) {
  const Dataset d = csv_dataset("x,y\n,1\n,2\n,3\n", "y", Task::Regression, {{"x", ColumnKind::Numeric}});
  const Column& x = d.column("x");
  EXPECT_EQ(x.kind, ColumnKind::Numeric);
  EXPECT_EQ(x.missing_count(), 3u);
}

TEST(LoadCsv, AllEmptyColumnInfersCategorical) {
  const Dataset d = csv_dataset("x,y\n,1\n,2\n", "y", Task::Regression);
  EXPECT_EQ(d.column("x").kind, ColumnKind::Categorical);
}

TEST(LoadCsv, InfersDateColumn) {
  const Dataset d = csv_dataset("when,y\n2021-01-02,1\n2021-06-30,2\n", "y", Task::Regression);
  const Column& c = d.column("when");
  EXPECT_EQ(c.kind, ColumnKind::Date);
  std::int64_t days = 0;
  ASSERT_TRUE(parse_iso_date("2021-01-02", days));
  EXPECT_EQ(c.values[0], static_cast<double>(days));
  EXPECT_EQ(days, 18629);  // 51 years incl. 13 leap days, plus 1
}

TEST(LoadCsv, KindInferenceRules) {
  auto kind = [](std::vector<std::string> cells) { return infer_kind(cells); };
  EXPECT_EQ(kind({"1", "2.5", "-3e2"}), ColumnKind::Numeric);
  EXPECT_EQ(kind({"yes", "no", ""}), ColumnKind::Boolean);
  EXPECT_EQ(kind({"0", "1", "1"}), ColumnKind::Boolean);
  EXPECT_EQ(kind({"true", "false", "TRUE"}), ColumnKind::Boolean);
  EXPECT_EQ(kind({"0", "1", "2"}), ColumnKind::Numeric);
  EXPECT_EQ(kind({"red", "green"}), ColumnKind::Categorical);
  EXPECT_EQ(kind({"2021-02-30"}), ColumnKind::Categorical);
}

TEST(LoadCsv, Errors) {
  EXPECT_THROW(csv_dataset("a,b\n1,2\n", "y", Task::Regression), InputError);
  EXPECT_THROW(csv_dataset("a,y\n", "y", Task::Regression), InputError);
  EXPECT_THROW(csv_dataset("a,y\nfoo,1\n", "y", Task::Regression, {{"a", ColumnKind::Numeric}}), InputError);
  EXPECT_THROW(csv_dataset("a,a\n1,2\n", "a", Task::Regression), InputError);
  EXPECT_THROW(csv_dataset("a,y\n1,red\n", "y", Task::Regression), InputError);
  EXPECT_THROW(csv_dataset("a,y\n1,2\n", "y", Task::Regression, {{"zz", ColumnKind::Numeric}}), InputError);
}

TEST(LoadCsv, MissingFileNamesPath) {
  SchemaConfig schema;
  schema.target_name = "y";
  try {
    load_csv("/nonexistent/file.csv", schema);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/file.csv"), std::string::npos);
  }
}

TEST(LoadCsv, ReloadIsStructurallyIdentical) {
  const auto dir = testing::data_dir() / "diabetes-mini";
  const SchemaConfig schema = load_schema(dir / "schema.json");
  const Dataset a = load_csv(dir / "diabetes.csv", schema);
  const Dataset b = load_csv(dir / "diabetes.csv", schema);
  ASSERT_EQ(a.columns().size(), b.columns().size());
  for (std::size_t c = 0; c < a.columns().size(); ++c) {
    const Column& x = a.columns()[c];
    const Column& y = b.columns()[c];
    EXPECT_EQ(x.name, y.name);
    EXPECT_EQ(x.kind, y.kind);
    EXPECT_EQ(x.missing, y.missing);
    EXPECT_EQ(x.text, y.text);
    EXPECT_EQ(x.levels, y.levels);
  }
  EXPECT_EQ(a.target_values(), b.target_values());
}

TEST(LoadCsv, SchemaResolvesConceptMapRelativeToFile) {
  const SchemaConfig s = parse_schema(R"({"target":"t","task":"regression","concept_map":"m.json",
                                         "overrides":{"a":"categorical"}})",
                                      "/base");
  EXPECT_EQ(s.concept_map_path, std::filesystem::path("/base/m.json"));
  EXPECT_EQ(s.column_kind_overrides.at("a"), ColumnKind::Categorical);
  EXPECT_EQ(s.task, Task::Regression);
  EXPECT_THROW(parse_schema(R"({"task":"regression"})"), InputError);
  EXPECT_THROW(parse_schema(R"({"target":"t","task":"ranking"})"), InputError);
}

TEST(KindInference, OrderInsensitive) {
  Rng rng(11);
  const std::vector<std::vector<std::string>> pools = {
      {"1", "2.5", "", "7"},        {"yes", "no", "", "yes"},       {"2021-01-02", "2020-12-31", ""},
      {"a", "b", "1", "2021-01-01"}, {"0", "1", "", "0"},           {"", "", ""},
  };
  for (const auto& pool : pools) {
    const ColumnKind expected = infer_kind(pool);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::string> cells;
      const std::size_t n = 1 + rng.index(12);
      for (std::size_t i = 0; i < n; ++i) cells.push_back(pool[i % pool.size()]);
      const ColumnKind base = infer_kind(cells);
      rng.shuffle(cells.begin(), cells.end());
      EXPECT_EQ(infer_kind(cells), base);
    }
    std::vector<std::string> shuffled = pool;
    rng.shuffle(shuffled.begin(), shuffled.end());
    EXPECT_EQ(infer_kind(shuffled), expected);
  }
}

TEST(SplitKfold, SizesFor768Rows) {
  const auto folds = kfold_indices(768, 5, 3);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.valid.size());
  std::sort(sizes.rbegin(), sizes.rend());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{154, 154, 154, 153, 153}));
  expect_partition(folds, 768);
}

TEST(SplitKfold, LeaveOneOut) {
  const auto folds = kfold_indices(6, 6, 0);
  ASSERT_EQ(folds.size(), 6u);
  for (const auto& f : folds) EXPECT_EQ(f.valid.size(), 1u);
  expect_partition(folds, 6);
}

TEST(SplitKfold, Deterministic) {
  const auto a = kfold_indices(50, 4, 9);
  const auto b = kfold_indices(50, 4, 9);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].valid, b[i].valid);
}

TEST(SplitKfold, Errors) {
  EXPECT_THROW(kfold_indices(3, 4, 0), InputError);
  EXPECT_THROW(kfold_indices(3, 1, 0), InputError);
  const Dataset d = csv_dataset("x,y\n1,1\n2,2\n3,3\n", "y", Task::Regression);
  EXPECT_THROW(split_kfold(d, 2, 0, true), InputError);
  EXPECT_EQ(split_kfold(d, 3, 0, false).size(), 3u);
}

TEST(SplitKfold, PartitionProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(300);
    const std::size_t k = 2 + rng.index(std::min<std::size_t>(n - 1, 12));
    const auto folds = kfold_indices(n, k, rng.next());
    ASSERT_EQ(folds.size(), k);
    expect_partition(folds, n);
    std::size_t lo = n, hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.valid.size());
      hi = std::max(hi, f.valid.size());
    }
    EXPECT_LE(hi - lo, 1u);
  }
}

TEST(SplitKfold, StratifiedProportionsProperty) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10 + rng.index(300);
    const int classes = 2 + static_cast<int>(rng.index(3));
    std::vector<int> strata(n);
    for (auto& s : strata) s = rng.uniform() < 0.7 ? 0 : 1 + static_cast<int>(rng.index(classes - 1));
    const std::size_t k = 2 + rng.index(8);
    const auto folds = kfold_indices(n, k, rng.next(), strata);
    expect_partition(folds, n);
    for (int c = 0; c < classes; ++c) {
      const double total = static_cast<double>(std::count(strata.begin(), strata.end(), c));
      for (const auto& f : folds) {
        std::size_t in_fold = 0;
        for (std::size_t i : f.valid) in_fold += strata[i] == c;
        EXPECT_LE(std::abs(static_cast<double>(in_fold) - total / static_cast<double>(k)), 1.0)
            << "class " << c << " n=" << n << " k=" << k;
      }
    }
  }
}

}  // namespace
}  // namespace kraft
