#pragma once

#include "zsreg/keypoints.hpp"
#include "zsreg/raster.hpp"
#include "zsreg/regressor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>

namespace zsreg {

// Non-learned conditioning applied around the regressor. Fixed points are
// whitened (zero mean, identity covariance); moving points are centered and
// scaled isotropically to unit RMS per axis. The network predicts the
// transform between the conditioned frames; `restore` maps it back.
struct ConditionedSubset {
  Eigen::VectorXf input;           // kInputWidth values, fixed block then moving block
  Eigen::Matrix3d fixed_frame;     // T: fixed -> conditioned fixed
  Eigen::Matrix3d moving_unframe;  // U^-1: conditioned moving -> moving

  // M = U^-1 M' T.
  AffineParams restore(const AffineParams& conditioned) const;
  // M' = U M T^-1, the training target for a known M.
  AffineParams condition_target(const AffineParams& m) const;
};

// `raw` is the kInputWidth layout: 64 fixed (x, y) then 64 moving (x, y).
ConditionedSubset condition_input(std::span<const float> raw);
ConditionedSubset condition_subset(std::span<const Correspondence> subset);

// Lays out exactly kSubsetSize correspondences in the kInputWidth order.
Eigen::VectorXf pack_subset(std::span<const Correspondence> subset);

// Single forward pass on exactly 64 correspondences. The result maps fixed
// coordinates to moving coordinates.
AffineParams predict_params(const RegressorModel& model, std::span<const Correspondence> subset);

// Anything that maps a 64-correspondence subset to parameters.
using SubsetPredictor = std::function<AffineParams(std::span<const Correspondence>)>;

inline constexpr int kBootstrapSets = 10;

// Mean of the predictions on kBootstrapSets subsets of 64 pairs drawn
// uniformly with replacement from `corr`.
AffineParams bootstrap_estimate(const SubsetPredictor& predict, const CorrespondenceList& corr,
                                std::uint64_t seed);
AffineParams bootstrap_estimate(const RegressorModel& model, const CorrespondenceList& corr,
                                std::uint64_t seed);

// Closed-form minimizer of sum ||moving - M [fixed, 1]||^2. Throws
// DegenerateGeometry when the fixed points are collinear or too few.
AffineParams least_squares_fit(std::span<const Correspondence> corr);


// Consensus screening ahead of the regressor: draws `trials` random triples,
// fits the exact affine through each, and keeps the pairs within `tolerance`
// (normalized units) of the best-supported fit after one least-squares
// refinement. Returns `corr` unchanged when no fit gathers
// kMinCorrespondences inliers.
inline constexpr int kScreeningTrials = 300;
CorrespondenceList screen_correspondences(const CorrespondenceList& corr, double tolerance, std::uint64_t seed,
                                          int trials = kScreeningTrials);

}  // namespace zsreg
