#pragma once

#include "zsreg/conv_features.hpp"
#include "zsreg/estimation.hpp"
#include "zsreg/keypoints.hpp"
#include "zsreg/metrics.hpp"
#include "zsreg/raster.hpp"
#include "zsreg/regressor.hpp"

#include <cstdint>
#include <vector>

namespace zsreg {

inline constexpr int kDefaultPad = 64;

struct RegisterOptions {
  int pad = kDefaultPad;
  double threshold_fraction = kDefaultThresholdFraction;
  std::uint64_t seed = 0;     // bootstrap resampling
  double fg_threshold = 0.0;  // Dice binarization on the [0, 1] images
  double screen_tolerance_px = 2.0;  // consensus screening of pairs; 0 disables
};

struct StageTimings {
  double preprocess_ms = 0.0;
  double conv_ms = 0.0;
  double com_ms = 0.0;
  double estimate_ms = 0.0;
  double warp_ms = 0.0;
  double metrics_ms = 0.0;

  double total_ms() const {
    return preprocess_ms + conv_ms + com_ms + estimate_ms + warp_ms + metrics_ms;
  }
};

struct RegistrationResult {
  // Maps fixed-image normalized coordinates to moving-image normalized
  // coordinates (both normalized by the unpadded extent).
  AffineParams params;
  Raster warped;  // [0, 1]-rescaled moving image resampled onto the fixed grid
  MetricReport before;
  MetricReport after;
  StageTimings timings;
  KeypointSet fixed_keypoints;
  KeypointSet moving_keypoints;
  std::size_t correspondences = 0;
};

// Preprocessed inputs and keypoints for one image; reused by the iterative
// and uncertainty drivers.
struct PreparedImage {
  Raster unit;           // [0, 1] copy for metrics and warping
  Raster preprocessed;   // standardized and padded
  KeypointSet keypoints;
};

PreparedImage prepare_image(const Raster& img, const FilterBank& bank, const RegisterOptions& options,
                            StageTimings* timings = nullptr);

KeypointSet keypoints_for(const Raster& preprocessed, const FilterBank& bank, double threshold_fraction,
                          StageTimings* timings = nullptr);

// Full pipeline: preprocess, features, keypoints, pairing, bootstrap
// estimate, warp, metrics before and after. Images must share dimensions.
RegistrationResult register_images(const Raster& fixed, const Raster& moving, const SubsetPredictor& predict,
                                   const FilterBank& bank, const RegisterOptions& options = {});
RegistrationResult register_images(const Raster& fixed, const Raster& moving, const RegressorModel& model,
                                   const FilterBank& bank, const RegisterOptions& options = {});

// Transform estimated from two keypoint sets, expressed in the unpadded
// frame of an image with `original_extent`.
AffineParams estimate_from_keypoints(const KeypointSet& fixed, const KeypointSet& moving,
                                     const SubsetPredictor& predict, const RegisterOptions& options,
                                     double original_extent, std::size_t* pair_count = nullptr);

struct IterativeOptions {
  double learning_rate = 0.5;
  int max_iters = 10;
  double tolerance = 0.002;  // max |residual - identity| per parameter
};

struct IterativeResult {
  AffineParams params;
  int iterations = 0;
  bool converged = false;
  std::vector<AffineParams> residuals;
  RegistrationResult final;  // metrics for the composed transform
};

// Repeatedly estimates the residual between `fixed` and the moving image
// warped by the accumulated transform, and composes (1 - lr) I + lr R into
// it. Stops once a residual is within tolerance of identity.
IterativeResult iterative_register(const Raster& fixed, const Raster& moving, const SubsetPredictor& predict,
                                   const FilterBank& bank, const IterativeOptions& iterative,
                                   const RegisterOptions& options = {});
IterativeResult iterative_register(const Raster& fixed, const Raster& moving, const RegressorModel& model,
                                   const FilterBank& bank, const IterativeOptions& iterative,
                                   const RegisterOptions& options = {});

SubsetPredictor model_predictor(const RegressorModel& model);

}  // namespace zsreg
