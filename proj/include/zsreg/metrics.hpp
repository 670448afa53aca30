#pragma once

#include "zsreg/raster.hpp"

namespace zsreg {

inline constexpr int kSsimWindow = 8;
inline constexpr int kMiBins = 32;

struct MetricReport {
  double dice = 0.0;
  double ssim = 0.0;
  double mi = 0.0;   // bits
  double mse = 0.0;
};

// 2|A∩B| / (|A|+|B|) with A, B the samples above `fg_threshold`; 1 when both
// masks are empty.
double dice(const Raster& fixed, const Raster& moving, double fg_threshold = 0.0);

// Mean of the local SSIM map over all 8x8 windows (stride 1, uniform
// weights) after rescaling both images to [0, 1]; clamped to [0, 1].
double ssim(const Raster& fixed, const Raster& moving);
// The unclamped mean, for symmetry and range checks.
double ssim_raw(const Raster& fixed, const Raster& moving);

// Σ p(f,m) log2(p(f,m) / (p(f) p(m))) over a bins x bins joint histogram of
// the [0, 1]-rescaled intensities.
double mutual_information(const Raster& fixed, const Raster& moving, int bins = kMiBins);

double mse(const Raster& fixed, const Raster& moving);

// All four metrics; inputs are expected on a [0, 1] scale.
MetricReport compute_metrics(const Raster& fixed, const Raster& moving, double fg_threshold = 0.0);

}  // namespace zsreg
