#pragma once

#include "zsreg/raster.hpp"

#include <cstdint>

namespace zsreg {

// Brain-like synthetic test image: elliptical scalp ring, dark gap, brain
// tissue with an inner core, a handful of internal blobs of distinct
// intensity, mild blur and noise restricted to the head. Background is 0.
struct PhantomOptions {
  int width = 240;
  int height = 240;
  double head_fraction = 0.5;  // head semi-minor axis as a fraction of min(width, height) / 2
  int blobs = 7;
  double blur_sigma = 1.0;     // pixels
  double noise_sigma = 0.01;
};

Raster make_phantom(std::uint64_t seed, const PhantomOptions& options = {});

// Separable Gaussian blur with zero extension.
Raster gaussian_blur(const Raster& img, double sigma);

}  // namespace zsreg
