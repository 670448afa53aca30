#include "zsreg/raster.hpp"

#include "zsreg/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace zsreg {

Raster::Raster(int width, int height, float fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw DimensionMismatch("raster dimensions must be positive, got " + std::to_string(width) +
                            "x" + std::to_string(height));
  }
  samples_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Raster::Raster(int width, int height, std::vector<float> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  if (width < 1 || height < 1) {
    throw DimensionMismatch("raster dimensions must be positive, got " + std::to_string(width) +
                            "x" + std::to_string(height));
  }
  if (samples_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DimensionMismatch("raster sample count " + std::to_string(samples_.size()) +
                            " does not match " + std::to_string(width) + "x" +
                            std::to_string(height));
  }
}

bool Raster::all_finite() const {
  return std::all_of(samples_.begin(), samples_.end(), [](float v) { return std::isfinite(v); });
}

AffineParams AffineParams::from_matrix(const Eigen::Matrix3d& m) {
  AffineParams p;
  p.values = {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2)};
  return p;
}

Eigen::Matrix3d AffineParams::matrix() const {
  Eigen::Matrix3d m;
  m << values[0], values[1], values[2], values[3], values[4], values[5], 0.0, 0.0, 1.0;
  return m;
}

Eigen::Vector2d AffineParams::apply(const Eigen::Vector2d& p) const {
  return {values[0] * p.x() + values[1] * p.y() + values[2],
          values[3] * p.x() + values[4] * p.y() + values[5]};
}

bool AffineParams::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double AffineParams::max_abs_diff(const AffineParams& other) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    worst = std::max(worst, std::abs(values[i] - other.values[i]));
  }
  return worst;
}

AffineParams compose(const AffineParams& outer, const AffineParams& inner) {
  return AffineParams::from_matrix(outer.matrix() * inner.matrix());
}

AffineParams inverse(const AffineParams& params) {
  const Eigen::Matrix3d m = params.matrix();
  if (std::abs(m.topLeftCorner<2, 2>().determinant()) < 1e-300) {
    throw DegenerateGeometry("affine transform is singular");
  }
  return AffineParams::from_matrix(m.inverse());
}

Eigen::Matrix3d to_pixel_space(const AffineParams& params, double extent) {
  // S^-1 M S with S = diag(1/L, 1/L, 1): the linear part is unchanged and the
  // translation scales by L.
  Eigen::Matrix3d m = params.matrix();
  m(0, 2) *= extent;
  m(1, 2) *= extent;
  return m;
}

AffineParams from_pixel_space(const Eigen::Matrix3d& pixel_matrix, double extent) {
  Eigen::Matrix3d m = pixel_matrix;
  m(0, 2) /= extent;
  m(1, 2) /= extent;
  return AffineParams::from_matrix(m);
}

AffineParams unpad_params(const AffineParams& padded, int pad, double padded_extent,
                          double original_extent) {
  // v (original normalized) -> u (padded normalized): u = (L_o v + pad) / L_p.
  Eigen::Matrix3d embed = Eigen::Matrix3d::Identity();
  embed(0, 0) = embed(1, 1) = original_extent / padded_extent;
  embed(0, 2) = embed(1, 2) = static_cast<double>(pad) / padded_extent;
  return AffineParams::from_matrix(embed.inverse() * padded.matrix() * embed);
}

Raster pad_zero(const Raster& img, int pad) {
  if (pad < 0) {
    throw DimensionMismatch("padding must be non-negative");
  }
  Raster out(img.width() + 2 * pad, img.height() + 2 * pad, 0.0f);
  for (int row = 0; row < img.height(); ++row) {
    const auto src = img.samples().subspan(static_cast<std::size_t>(row) * img.width(),
                                           static_cast<std::size_t>(img.width()));
    std::copy(src.begin(), src.end(), &out(pad, row + pad));
  }
  return out;
}

Raster preprocess(const Raster& img, int pad) {
  const auto s = img.samples();
  const double n = static_cast<double>(s.size());
  double mean = 0.0;
  for (float v : s) mean += v;
  mean /= n;
  double var = 0.0;
  for (float v : s) var += (v - mean) * (v - mean);
  double stddev = std::sqrt(var / n);
  if (stddev < 1e-8) stddev = 1.0;

  Raster standardized(img.width(), img.height());
  auto out = standardized.samples();
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = static_cast<float>((s[i] - mean) / stddev);
  }
  return pad == 0 ? standardized : pad_zero(standardized, pad);
}

Raster rescale_unit(const Raster& img) {
  const auto s = img.samples();
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  Raster out(img.width(), img.height(), 0.0f);
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  if (range <= 0.0) return out;
  auto o = out.samples();
  for (std::size_t i = 0; i < s.size(); ++i) {
    o[i] = static_cast<float>((s[i] - static_cast<double>(*lo)) / range);
  }
  return out;
}

float sample_bilinear(const Raster& img, double x, double y) {
  if (!(x > -1.0 && y > -1.0 && x < img.width() && y < img.height())) return 0.0f;
  // Positions within rounding noise of a grid line sample it exactly.
  constexpr double kSnap = 1e-9;
  const double rx = std::round(x);
  const double ry = std::round(y);
  if (std::abs(x - rx) < kSnap) x = rx;
  if (std::abs(y - ry) < kSnap) y = ry;
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int c0 = static_cast<int>(fx);
  const int r0 = static_cast<int>(fy);
  const double wx = x - fx;
  const double wy = y - fy;
  auto at = [&](int c, int r) -> double {
    if (c < 0 || r < 0 || c >= img.width() || r >= img.height()) return 0.0;
    return img(c, r);
  };
  const double top = (1.0 - wx) * at(c0, r0) + (wx > 0.0 ? wx * at(c0 + 1, r0) : 0.0);
  double value = (1.0 - wy) * top;
  if (wy > 0.0) {
    value += wy * ((1.0 - wx) * at(c0, r0 + 1) + (wx > 0.0 ? wx * at(c0 + 1, r0 + 1) : 0.0));
  }
  return static_cast<float>(value);
}

Raster warp_affine(const Raster& img, const AffineParams& params) {
  const Eigen::Matrix3d m = to_pixel_space(params, img.extent());
  Raster out(img.width(), img.height(), 0.0f);
  for (int row = 0; row < img.height(); ++row) {
    // Row-constant part of the mapping, then step along the row.
    const double bx = m(0, 1) * row + m(0, 2);
    const double by = m(1, 1) * row + m(1, 2);
    for (int col = 0; col < img.width(); ++col) {
      out(col, row) = sample_bilinear(img, m(0, 0) * col + bx, m(1, 0) * col + by);
    }
  }
  return out;
}

Eigen::Vector2d image_center(const Raster& img) {
  const double extent = img.extent();
  return {0.5 * (img.width() - 1) / extent, 0.5 * (img.height() - 1) / extent};
}

AffineParams make_affine(double rotation, double shear, double tx, double ty,
                         const Eigen::Vector2d& pivot) {
  Eigen::Matrix3d to_pivot = Eigen::Matrix3d::Identity();
  to_pivot(0, 2) = pivot.x();
  to_pivot(1, 2) = pivot.y();
  Eigen::Matrix3d from_pivot = Eigen::Matrix3d::Identity();
  from_pivot(0, 2) = -pivot.x();
  from_pivot(1, 2) = -pivot.y();

  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  rot(0, 0) = c;
  rot(0, 1) = -s;
  rot(1, 0) = s;
  rot(1, 1) = c;

  Eigen::Matrix3d sh = Eigen::Matrix3d::Identity();
  sh(0, 1) = std::tan(shear);

  Eigen::Matrix3d trans = Eigen::Matrix3d::Identity();
  trans(0, 2) = tx;
  trans(1, 2) = ty;

  return AffineParams::from_matrix(to_pivot * rot * sh * from_pivot * trans);
}

InducedTransform random_affine(std::uint64_t seed, const InductionBounds& bounds, double extent,
                               const Eigen::Vector2d& pivot) {
  std::mt19937_64 rng(seed);
  auto draw = [&rng](double bound) {
    if (bound <= 0.0) return 0.0;
    return std::uniform_real_distribution<double>(-bound, bound)(rng);
  };
  InducedTransform t;
  t.rotation = draw(bounds.rot_max);
  t.shear = draw(bounds.shear_max);
  t.tx_px = draw(bounds.trans_max);
  t.ty_px = draw(bounds.trans_max);
  t.params = make_affine(t.rotation, t.shear, t.tx_px / extent, t.ty_px / extent, pivot);
  return t;
}

InducedTransform random_affine(std::uint64_t seed, const InductionBounds& bounds, double extent) {
  const double c = 0.5 * (extent - 1.0) / extent;
  return random_affine(seed, bounds, extent, Eigen::Vector2d(c, c));
}

}  // namespace zsreg
