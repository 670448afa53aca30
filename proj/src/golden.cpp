#include "zsreg/golden.hpp"

#include "zsreg/error.hpp"
#include "zsreg/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace zsreg {
namespace {

constexpr int kBlocksPerCase = 1 + kFeatureMaps;

Raster rows_of(const Raster& sheet, int first_row, int height) {
  Raster out(sheet.width(), height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < sheet.width(); ++c) out(c, r) = sheet(c, first_row + r);
  }
  return out;
}

}  // namespace

std::vector<GoldenCase> load_golden(const std::filesystem::path& path, int stimulus_height) {
  const Raster sheet = load_f32r(path);
  const int block = stimulus_height * kBlocksPerCase;
  if (stimulus_height < 1 || sheet.height() % block != 0) {
    throw ShapeError(path.string() + ": height " + std::to_string(sheet.height()) + " is not a multiple of " +
                     std::to_string(block));
  }
  std::vector<GoldenCase> cases(static_cast<std::size_t>(sheet.height() / block));
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const int base = static_cast<int>(k) * block;
    cases[k].stimulus = rows_of(sheet, base, stimulus_height);
    for (int m = 0; m < kFeatureMaps; ++m) {
      cases[k].response.push_back(rows_of(sheet, base + (m + 1) * stimulus_height, stimulus_height));
    }
  }
  return cases;
}

void save_golden(const std::vector<GoldenCase>& cases, const std::filesystem::path& path) {
  if (cases.empty()) throw Error("no golden cases to write");
  const int w = cases.front().stimulus.width();
  const int h = cases.front().stimulus.height();
  Raster sheet(w, h * kBlocksPerCase * static_cast<int>(cases.size()));
  int row = 0;
  auto put = [&](const Raster& block) {
    if (block.width() != w || block.height() != h) throw ShapeError("golden blocks differ in size");
    for (int r = 0; r < h; ++r, ++row) {
      for (int c = 0; c < w; ++c) sheet(c, row) = block(c, r);
    }
  };
  for (const auto& gc : cases) {
    if (gc.response.size() != static_cast<std::size_t>(kFeatureMaps)) throw ShapeError("golden case needs 128 maps");
    put(gc.stimulus);
    for (const auto& m : gc.response) put(m);
  }
  save_f32r(sheet, path);
}

double golden_max_deviation(const FilterBank& bank, const std::vector<GoldenCase>& cases) {
  double worst = 0.0;
  for (const auto& gc : cases) {
    const FeatureStack stack = extract_features(gc.stimulus, bank);
    for (std::size_t m = 0; m < stack.maps.size(); ++m) {
      const auto& got = stack.maps[m].samples();
      const auto& want = gc.response[m].samples();
      for (std::size_t i = 0; i < got.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(got[i]) - want[i]));
      }
    }
  }
  return worst;
}

}  // namespace zsreg
