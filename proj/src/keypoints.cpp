#include "zsreg/keypoints.hpp"

#include "zsreg/error.hpp"
#include "zsreg/parallel.hpp"

#include <ostream>
#include <string>

namespace zsreg {

CenterOfMass center_of_mass(const Raster& map) {
  double mass = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (int row = 0; row < map.height(); ++row) {
    double row_mass = 0.0;
    double row_sx = 0.0;
    for (int col = 0; col < map.width(); ++col) {
      const double f = map(col, row);
      row_mass += f;
      row_sx += f * col;
    }
    mass += row_mass;
    sx += row_sx;
    sy += row_mass * row;
  }
  if (!(mass > 0.0)) return {};
  return {sx / mass, sy / mass, true};
}

std::size_t KeypointSet::valid_count() const {
  std::size_t n = 0;
  for (const auto& p : points) n += p.valid ? 1 : 0;
  return n;
}

KeypointSet extract_keypoints(const FeatureStack& stack, double extent, double threshold_fraction) {
  KeypointSet set;
  set.source_extent = extent;
  set.points.resize(stack.maps.size());
  parallel_for(stack.maps.size(), [&](std::size_t i) {
    const CenterOfMass com = center_of_mass(threshold_map(stack.maps[i], threshold_fraction));
    set.points[i] = {com.x / extent, com.y / extent, com.valid};
  });
  return set;
}

CorrespondenceList pair_keypoints(const KeypointSet& fixed, const KeypointSet& moving) {
  if (fixed.points.size() != moving.points.size()) {
    throw DimensionMismatch("keypoint sets differ in size: " + std::to_string(fixed.points.size()) +
                            " vs " + std::to_string(moving.points.size()));
  }
  CorrespondenceList pairs;
  for (std::size_t i = 0; i < fixed.points.size(); ++i) {
    const auto& f = fixed.points[i];
    const auto& m = moving.points[i];
    if (f.valid && m.valid) {
      pairs.push_back({{f.x, f.y}, {m.x, m.y}, static_cast<int>(i)});
    }
  }
  if (pairs.size() < kMinCorrespondences) {
    throw InsufficientCorrespondences("only " + std::to_string(pairs.size()) +
                                      " valid keypoint pairs, need at least " +
                                      std::to_string(kMinCorrespondences));
  }
  return pairs;
}

void write_keypoints_csv(std::ostream& out, const KeypointSet& fixed, const KeypointSet& moving) {
  out << "index,fx,fy,mx,my,valid\n";
  const std::size_t n = std::min(fixed.points.size(), moving.points.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = fixed.points[i];
    const auto& m = moving.points[i];
    out << i << ',' << f.x << ',' << f.y << ',' << m.x << ',' << m.y << ','
        << ((f.valid && m.valid) ? 1 : 0) << '\n';
  }
}

}  // namespace zsreg
