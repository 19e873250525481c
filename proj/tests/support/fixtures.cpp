#include "fixtures.hpp"

#include <fstream>
#include <sstream>

#include <unistd.h>

#include "kraft/rng.hpp"

#ifndef KRAFT_DATA_DIR
#error "KRAFT_DATA_DIR must be defined"
#endif

namespace kraft::testing {

std::filesystem::path data_dir() { return KRAFT_DATA_DIR; }

Dataset csv_dataset(std::string_view text, std::string target, Task task,
                    std::map<std::string, ColumnKind> overrides) {
  SchemaConfig schema;
  schema.target_name = std::move(target);
  schema.task = task;
  schema.column_kind_overrides = std::move(overrides);
  std::istringstream in{std::string(text)};
  return parse_csv(in, schema);
}

Dataset planted_dataset(std::uint64_t seed, std::size_t rows) {
  Rng rng(derive_seed(seed, 0x706c616eULL));
  std::ostringstream csv;
  csv.precision(17);
  csv << "x1,x2,x3,x4,x5,y\n";
  for (std::size_t r = 0; r < rows; ++r) {
    double x[5];
    for (double& v : x) v = rng.uniform(0.5, 2.0);
    const double y = x[0] / (x[1] * x[1]) + 0.05 * rng.normal();
    for (double v : x) csv << v << ',';
    csv << y << '\n';
  }
  return csv_dataset(csv.str(), "y", Task::Regression);
}

std::map<std::string, ConceptRef> planted_mapping() {
  return {
      {"x1", {"Weight", "kg"}},     {"x2", {"Height", "m"}}, {"x3", {"Temperature", "°C"}},
      {"x4", {"Price", "USD"}},     {"x5", {"Duration", "s"}},
  };
}

const KnowledgeGraph& default_kg() {
  static const KnowledgeGraph kg = load_kg(data_dir() / "default_kg.json");
  return kg;
}

TempDir::TempDir(std::string_view tag) {
  static std::uint64_t counter = 0;
  const auto base = std::filesystem::temp_directory_path();
  const auto pid = static_cast<std::uint64_t>(::getpid());
  Rng rng(static_cast<std::uint64_t>(std::hash<std::string_view>{}(tag)) ^ (pid << 20) ^ ++counter);
  do {
    path_ = base / ("kraft-" + std::string(tag) + "-" + std::to_string(rng.next() % 1'000'000'000));
  } while (std::filesystem::exists(path_));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace kraft::testing
