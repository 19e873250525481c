#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kraft/engine.hpp"

namespace kraft::cli {

/// A run description; relative paths are resolved against the manifest's directory.
struct RunManifest {
  RunInputs inputs;
  std::filesystem::path out;
  nlohmann::json config = nlohmann::json::object();
};

RunManifest load_manifest(const std::filesystem::path& path);

/// Edit distance, used to suggest feature names.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Entry point shared by the binary and the tests. Returns the exit code:
/// 0 success, 1 user error, 2 internal error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kraft::cli
