#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "multimag/types.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("multimag_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

inline multimag::Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  multimag::Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline multimag::NodalVectorField random_unit_field(std::size_t n, std::mt19937_64& rng) {
  multimag::NodalVectorField m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = random_unit(rng);
  return m;
}

}  // namespace testing
