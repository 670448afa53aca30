#pragma once

#include "zsreg/raster.hpp"

#include <filesystem>

namespace zsreg {

// Dispatches on content: "F32R" magic selects the raw float format, PNG
// signature selects PNG. Integer PNG samples are scaled to [0, 1]; color or
// alpha inputs are reduced to grayscale by the mean of the color channels.
Raster load_raster(const std::filesystem::path& path);

// Raw float ".f32r": "F32R", u32 width, u32 height, width*height f32, all LE.
Raster load_f32r(const std::filesystem::path& path);
void save_f32r(const Raster& img, const std::filesystem::path& path);

Raster load_png(const std::filesystem::path& path);
// Samples are clamped to [0, 1] and quantized to the requested bit depth.
void save_png(const Raster& img, const std::filesystem::path& path, int bit_depth = 8);

}  // namespace zsreg
