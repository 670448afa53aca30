#include "zsreg/conv_features.hpp"

#include <array>

namespace zsreg {
namespace {

using Kernel = std::array<std::array<float, 3>, 3>;

constexpr Kernel kGauss{{{1.f / 16, 2.f / 16, 1.f / 16}, {2.f / 16, 4.f / 16, 2.f / 16}, {1.f / 16, 2.f / 16, 1.f / 16}}};

constexpr float kLevelStart = 0.1f;
constexpr float kLevelStep = 0.065f;
constexpr float kPlateauBias = 0.8f;  // fraction of the band height removed by the bias

void add_kernel(ConvLayer& layer, int out, int in, float gain) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) layer.weight(out, in, r, c) += gain * kGauss[r][c];
  }
}

// Flat-topped band over ramps n .. n+width: rises across [l_n, l_n+1], flat
// up to l_n+width, falls to zero at l_n+width+1. Height is one level step.
void add_band(ConvLayer& layer, int out, int n, int width) {
  add_kernel(layer, out, n, 1.0f);
  add_kernel(layer, out, n + 1, -1.0f);
  add_kernel(layer, out, n + width, -1.0f);
  add_kernel(layer, out, n + width + 1, 1.0f);
  layer.biases[out] = -kPlateauBias * kLevelStep;
}

}  // namespace

// Region detectors rather than edge detectors: the center of mass of a
// thresholded region map moves with the region under any affine map, while
// the strongest-edge location does not.
//
// Layer 1: smoothed intensity ramps ReLU(g * img - l_k), l_k = 0.1 + 0.065 k
//          in standardized units.
// Layer 2:
//   0-58   narrow bands (plateau of three steps), one per starting level
//   59-63  wide bands (plateau of nine steps)
// The bias keeps only pixels well inside a band, so maps whose band meets
// nothing but blurred boundaries go to zero and drop out of the pairing.
FilterBank builtin_filter_bank() {
  FilterBank bank{ConvLayer(kFiltersPerLayer, 1), ConvLayer(kFiltersPerLayer, kFiltersPerLayer)};
  for (int k = 0; k < kFiltersPerLayer; ++k) {
    add_kernel(bank.layer1, k, 0, 1.0f);
    bank.layer1.biases[k] = -(kLevelStart + kLevelStep * static_cast<float>(k));
  }
  constexpr int kNarrow = 4;
  constexpr int kWide = 10;
  int out = 0;
  for (int n = 0; n + kNarrow + 1 < kFiltersPerLayer; ++n) add_band(bank.layer2, out++, n, kNarrow);
  for (int n = 0; out < kFiltersPerLayer; n += 12) add_band(bank.layer2, out++, n, kWide);
  return bank;
}

}  // namespace zsreg
