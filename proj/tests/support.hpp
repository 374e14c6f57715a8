#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "geoloc/util/io.hpp"

namespace testing_support {

inline std::filesystem::path data_dir() { return GEOLOC_DATA_DIR; }
inline std::filesystem::path fixture(const std::string& name) {
  return data_dir() / "fixtures" / name;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("geoloc-test-" + tag + "-" + std::to_string(rng() % 1000000007ULL));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
