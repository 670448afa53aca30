#pragma once

#include "zsreg/raster.hpp"

#include <filesystem>
#include <vector>

namespace zsreg {

// One convolution layer, weights stored [out][in][kh][kw].
struct ConvLayer {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 3;
  int kernel_w = 3;
  std::vector<float> weights;
  std::vector<float> biases;

  ConvLayer() = default;
  ConvLayer(int out, int in, int kh = 3, int kw = 3);

  float& weight(int o, int i, int r, int c) {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + r) * kernel_w + c];
  }
  float weight(int o, int i, int r, int c) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + r) * kernel_w + c];
  }
};

inline constexpr int kFiltersPerLayer = 64;
inline constexpr int kFeatureMaps = 2 * kFiltersPerLayer;
inline constexpr double kDefaultThresholdFraction = 0.95;

// conv1_1 / conv1_2 style pair: 64 3x3 filters over 1 or 3 input channels,
// then 64 3x3 filters over the 64 first-layer maps.
struct FilterBank {
  ConvLayer layer1;
  ConvLayer layer2;

  int in_channels() const { return layer1.in_channels; }
  // Throws ShapeError / FormatError when an invariant does not hold.
  void validate() const;
};

// ".zrw": "ZRW1", u32 layer count, per layer out/in/kh/kw (u32), weights
// [out][in][kh][kw] f32, out biases f32, trailing CRC32; all little-endian.
FilterBank load_filter_bank(const std::filesystem::path& path);
void save_filter_bank(const FilterBank& bank, const std::filesystem::path& path);

// Fixed intensity-band region kernels; needs no external weights.
FilterBank builtin_filter_bank();

// 64 first-layer maps followed by 64 second-layer maps, each the size of the
// input.
struct FeatureStack {
  std::vector<Raster> maps;
};

// Zero-padded ("same") stride-1 cross-correlation, bias, ReLU; no pooling.
// The grayscale input is replicated across the bank's input channels.
FeatureStack extract_features(const Raster& img, const FilterBank& bank);

// Single-layer helper exposed for tests: ReLU(conv(inputs, layer) + bias).
std::vector<Raster> apply_layer(const std::vector<Raster>& inputs, const ConvLayer& layer);

// Zeroes every sample <= fraction * max(map). An all-zero map is returned as is.
Raster threshold_map(const Raster& map, double fraction = kDefaultThresholdFraction);

}  // namespace zsreg
