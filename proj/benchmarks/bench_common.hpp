#pragma once

#include <sstream>

#include "kraft/data.hpp"
#include "kraft/rng.hpp"

namespace kraft::bench {

// Uniform numeric columns c0..c{cols-1} and a regression target.
inline Dataset numeric_dataset(std::size_t rows, std::size_t cols, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::ostringstream csv;
  csv.precision(17);
  for (std::size_t c = 0; c < cols; ++c) csv << 'c' << c << ',';
  csv << "y\n";
  for (std::size_t r = 0; r < rows; ++r) {
    double y = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = rng.uniform(0.5, 2.0);
      y += v / static_cast<double>(c + 1);
      csv << v << ',';
    }
    csv << y + 0.1 * rng.normal() << '\n';
  }
  std::istringstream in(csv.str());
  return parse_csv(in, SchemaConfig{"y", Task::Regression, {}, {}});
}

}  // namespace kraft::bench
