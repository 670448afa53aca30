#pragma once

#include "zsreg/conv_features.hpp"
#include "zsreg/raster.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

namespace zsreg {

struct CenterOfMass {
  double x = 0.0;  // column
  double y = 0.0;  // row
  bool valid = false;
};

// Intensity-weighted mean pixel position; invalid at (0, 0) when the map has
// no mass.
CenterOfMass center_of_mass(const Raster& map);

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  bool valid = false;
};

// One keypoint per feature map, in normalized units (pixel / source_extent).
// Index i corresponds to feature map i in both images.
struct KeypointSet {
  std::vector<Keypoint> points;
  double source_extent = 1.0;

  std::size_t valid_count() const;
};

KeypointSet extract_keypoints(const FeatureStack& stack, double extent,
                              double threshold_fraction = kDefaultThresholdFraction);

struct Correspondence {
  Eigen::Vector2d fixed;
  Eigen::Vector2d moving;
  int index = 0;  // feature-map index the pair came from
};

using CorrespondenceList = std::vector<Correspondence>;

inline constexpr std::size_t kMinCorrespondences = 8;

// Keeps index i when both sets have a valid point there. Throws
// InsufficientCorrespondences below kMinCorrespondences pairs.
CorrespondenceList pair_keypoints(const KeypointSet& fixed, const KeypointSet& moving);

// Debug dump, one line per index: "index,fx,fy,mx,my,valid".
void write_keypoints_csv(std::ostream& out, const KeypointSet& fixed, const KeypointSet& moving);

}  // namespace zsreg
