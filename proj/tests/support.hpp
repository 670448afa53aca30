#pragma once

#include "zsreg/estimation.hpp"
#include "zsreg/raster.hpp"

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

namespace zsreg::test {

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("zsreg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Raster random_raster(int w, int h, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Raster img(w, h);
  for (float& v : img.samples()) v = u(rng);
  return img;
}

// Closed-form estimator standing in for the regressor where a test is about
// the surrounding pipeline.
inline SubsetPredictor least_squares_predictor() {
  return [](std::span<const Correspondence> subset) { return least_squares_fit(subset); };
}

inline std::filesystem::path shipped_model() { return ZSREG_TEST_MODEL; }
inline std::filesystem::path test_data(const std::string& name) {
  return std::filesystem::path(ZSREG_TEST_DATA) / name;
}

}  // namespace zsreg::test
