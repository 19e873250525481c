#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "kraft/data.hpp"
#include "kraft/kg.hpp"

namespace kraft::testing {

std::filesystem::path data_dir();

/// Dataset from inline CSV text.
Dataset csv_dataset(std::string_view text, std::string target, Task task,
                    std::map<std::string, ColumnKind> overrides = {});

/// Five U(0.5, 2) features x1..x5 and y = x1 / x2^2 + N(0, 0.05).
Dataset planted_dataset(std::uint64_t seed, std::size_t rows = 200);

/// x1 Weight kg, x2 Height m, x3 Temperature, x4 Price, x5 Duration.
std::map<std::string, ConceptRef> planted_mapping();

const KnowledgeGraph& default_kg();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);

}  // namespace kraft::testing
