#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace zsreg {

// Single-channel image with float samples stored row-major. Pixel centers sit
// at integer (col, row) coordinates; x is the column and y the row.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, float fill = 0.0f);
  Raster(int width, int height, std::vector<float> samples);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  // Normalization extent L = max(width, height).
  int extent() const { return width_ > height_ ? width_ : height_; }

  float operator()(int col, int row) const { return samples_[index(col, row)]; }
  float& operator()(int col, int row) { return samples_[index(col, row)]; }

  std::span<const float> samples() const { return samples_; }
  std::span<float> samples() { return samples_; }

  bool all_finite() const;
  bool same_shape(const Raster& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> samples_;
};

// 2x3 affine matrix [a11 a12 tx; a21 a22 ty] acting on homogeneous [x, y, 1]
// in normalized coordinates (pixel / L).
struct AffineParams {
  std::array<double, 6> values{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  static AffineParams identity() { return {}; }
  static AffineParams from_matrix(const Eigen::Matrix3d& m);

  double a11() const { return values[0]; }
  double a12() const { return values[1]; }
  double tx() const { return values[2]; }
  double a21() const { return values[3]; }
  double a22() const { return values[4]; }
  double ty() const { return values[5]; }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  Eigen::Matrix3d matrix() const;
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
  bool all_finite() const;

  // Largest absolute per-parameter difference.
  double max_abs_diff(const AffineParams& other) const;

  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

// this ∘ other: apply `other` first, then `this`.
AffineParams compose(const AffineParams& outer, const AffineParams& inner);
AffineParams inverse(const AffineParams& params);

// Conversions between normalized and pixel coordinates of an image whose
// extent is L: M_px = S^-1 M S with S = diag(1/L, 1/L).
Eigen::Matrix3d to_pixel_space(const AffineParams& params, double extent);
AffineParams from_pixel_space(const Eigen::Matrix3d& pixel_matrix, double extent);

// Re-expresses a transform estimated on a zero-padded copy of an image
// (extent `padded_extent`, `pad` pixels per side) in the original image's
// normalized coordinates.
AffineParams unpad_params(const AffineParams& padded, int pad, double padded_extent,
                          double original_extent);

// Mean-center, divide by the standard deviation (1 when below 1e-8), then pad
// `pad` zero pixels on every side.
Raster preprocess(const Raster& img, int pad);

// Embeds `img` in a zero border of `pad` pixels per side.
Raster pad_zero(const Raster& img, int pad);

// Min-max rescale to [0, 1]; a constant image maps to all zeros.
Raster rescale_unit(const Raster& img);

// Bilinear sample with zero outside the image.
float sample_bilinear(const Raster& img, double x, double y);

// Backward warp: out(p) = img(M * p), p in normalized coordinates.
Raster warp_affine(const Raster& img, const AffineParams& params);

struct InductionBounds {
  double trans_max = 50.0;  // pixels
  double rot_max = 0.3;     // radians
  double shear_max = 0.03;  // radians
};

// The sampled components of an induced transform, kept for reporting.
struct InducedTransform {
  AffineParams params;
  double rotation = 0.0;
  double shear = 0.0;
  double tx_px = 0.0;
  double ty_px = 0.0;
};

// rotation(θ) · shear(s) · translation(t) about a pivot (normalized units;
// defaults to the center of a square image of the given extent).
InducedTransform random_affine(std::uint64_t seed, const InductionBounds& bounds,
                               double extent);
InducedTransform random_affine(std::uint64_t seed, const InductionBounds& bounds,
                               double extent, const Eigen::Vector2d& pivot);
AffineParams make_affine(double rotation, double shear, double tx, double ty,
                         const Eigen::Vector2d& pivot);

// Center of the pixel grid in normalized units.
Eigen::Vector2d image_center(const Raster& img);

}  // namespace zsreg
