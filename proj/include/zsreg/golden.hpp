#pragma once

#include "zsreg/conv_features.hpp"

#include <filesystem>
#include <vector>

namespace zsreg {

// Golden convolution vectors shipped next to an exported bank. The file is an
// ordinary F32R raster of width W and height H * 129 * K: for each of K cases,
// H rows of stimulus followed by the 128 expected maps (64 first-layer, 64
// second-layer), each H rows tall.
struct GoldenCase {
  Raster stimulus;
  std::vector<Raster> response;
};

std::vector<GoldenCase> load_golden(const std::filesystem::path& path, int stimulus_height);
void save_golden(const std::vector<GoldenCase>& cases, const std::filesystem::path& path);

// Largest absolute difference between extract_features and the stored maps.
double golden_max_deviation(const FilterBank& bank, const std::vector<GoldenCase>& cases);

}  // namespace zsreg
