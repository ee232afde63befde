#pragma once

#include <filesystem>
#include <string>

#include "byzfed/rng.hpp"
#include "byzfed/types.hpp"

namespace byzfed::testing {

inline PointSet random_points(std::size_t t, Eigen::Index d, std::uint64_t seed, double sd = 1.0) {
  RngStream rng(seed, 77);
  PointSet out;
  for (std::size_t i = 0; i < t; ++i) out.push_back(rng.normal_vector(d, sd));
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("byzfed_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace byzfed::testing
