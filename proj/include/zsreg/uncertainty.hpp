#pragma once

#include "zsreg/conv_features.hpp"
#include "zsreg/estimation.hpp"
#include "zsreg/raster.hpp"
#include "zsreg/registration.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace zsreg {

inline constexpr double kDefaultBlackenFraction = 0.05;
inline constexpr int kDefaultTrials = 10;

// Indices of round(fraction * size) distinct pixels chosen uniformly.
std::vector<std::size_t> blacken_indices(std::size_t pixel_count, double fraction, std::uint64_t seed);

// Sets round(fraction * W * H) distinct, uniformly chosen pixels to 0.
Raster blacken(const Raster& img, double fraction, std::uint64_t seed);

struct UncertaintyReport {
  std::array<double, 6> param_variance{};
  Raster variance_map;  // per-pixel sample variance of the warped moving images
  int n_trials = 0;
  std::vector<AffineParams> estimates;
};

struct UncertaintyOptions {
  int trials = kDefaultTrials;
  double fraction = kDefaultBlackenFraction;
  std::uint64_t seed = 0;  // blackening stream; bootstrap uses RegisterOptions::seed
};

// Repeats the estimate with the preprocessed moving image randomly blackened
// in each trial. Variances use the n-1 denominator. Trials are independent
// and run in parallel; each derives its own seed from `seed` and its index.
UncertaintyReport estimate_uncertainty(const Raster& fixed, const Raster& moving, const SubsetPredictor& predict,
                                       const FilterBank& bank, const UncertaintyOptions& uncertainty,
                                       const RegisterOptions& options = {});
UncertaintyReport estimate_uncertainty(const Raster& fixed, const Raster& moving, const RegressorModel& model,
                                       const FilterBank& bank, const UncertaintyOptions& uncertainty,
                                       const RegisterOptions& options = {});

// Seed for trial `index` of a stream rooted at `seed` (splitmix64 step).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace zsreg
