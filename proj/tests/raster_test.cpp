#include "support.hpp"

#include "zsreg/raster.hpp"

#include <Eigen/LU>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace zsreg {
namespace {

TEST(Preprocess, ConstantImageBecomesZero) {
  const Raster out = preprocess(Raster(5, 3, 0.7f), 0);
  ASSERT_EQ(out.width(), 5);
  ASSERT_EQ(out.height(), 3);
  for (float v : out.samples()) EXPECT_EQ(v, 0.0f);
}

TEST(Preprocess, TwoSamplesStandardize) {
  const Raster out = preprocess(Raster(2, 1, {0.0f, 2.0f}), 0);
  EXPECT_FLOAT_EQ(out(0, 0), -1.0f);
  EXPECT_FLOAT_EQ(out(1, 0), 1.0f);
}

TEST(Preprocess, PaddingGeometry) {
  const Raster img(2, 2, {0.0f, 1.0f, 2.0f, 3.0f});
  const Raster unpadded = preprocess(img, 0);
  const Raster out = preprocess(img, 1);
  ASSERT_EQ(out.width(), 4);
  ASSERT_EQ(out.height(), 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const bool inside = r >= 1 && r <= 2 && c >= 1 && c <= 2;
      if (inside) {
        EXPECT_EQ(out(c, r), unpadded(c - 1, r - 1));
      } else {
        EXPECT_EQ(out(c, r), 0.0f);
      }
    }
  }
}

TEST(Preprocess, ZeroMeanUnitStdOverImageRegion) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Raster img = test::random_raster(31, 17, seed, -3.0f, 10.0f);
    const Raster out = preprocess(img, 4);
    double sum = 0.0;
    double sq = 0.0;
    for (int r = 0; r < img.height(); ++r) {
      for (int c = 0; c < img.width(); ++c) {
        const double v = out(c + 4, r + 4);
        sum += v;
        sq += v * v;
      }
    }
    const double n = static_cast<double>(img.size());
    const double mean = sum / n;
    EXPECT_LT(std::abs(mean), 1e-6);
    EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 1.0, 1e-6);
  }
}

TEST(Warp, IdentityIsExact) {
  const Raster img = test::random_raster(23, 19, 3);
  EXPECT_EQ(warp_affine(img, AffineParams::identity()), img);
}

TEST(Warp, OnePixelTranslationMovesBrightPixel) {
  Raster img(8, 8, 0.0f);
  img(3, 4) = 1.0f;
  AffineParams shift;
  shift[2] = -1.0 / 8.0;  // backward mapping: out(x) = img(x - 1)
  const Raster out = warp_affine(img, shift);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) EXPECT_EQ(out(c, r), (c == 4 && r == 4) ? 1.0f : 0.0f) << c << "," << r;
  }
}

TEST(Warp, TwoQuarterTurnsMatchHalfTurn) {
  Raster img(32, 32);
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) img(c, r) = static_cast<float>(0.5 + 0.4 * std::sin(0.3 * c) * std::cos(0.17 * r + 0.05 * c));
  }
  img(3, 5) = 1.0f;
  const Eigen::Vector2d pivot = image_center(img);
  const AffineParams quarter = make_affine(std::numbers::pi / 2, 0.0, 0.0, 0.0, pivot);
  const AffineParams half = make_affine(std::numbers::pi, 0.0, 0.0, 0.0, pivot);
  const Raster twice = warp_affine(warp_affine(img, quarter), quarter);
  const Raster once = warp_affine(img, half);
  double worst = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    worst = std::max(worst, static_cast<double>(std::abs(twice.samples()[i] - once.samples()[i])));
  }
  EXPECT_LE(worst, 2e-2);
}

TEST(Warp, ExtremeParametersStayFinite) {
  const Raster img = test::random_raster(16, 16, 9);
  const std::array<AffineParams, 3> cases{AffineParams{{1e6, -1e6, 1e6, 3.0, 1e-9, -1e6}},
                                          AffineParams{{0.0, 0.0, 0.5, 0.0, 0.0, 0.5}},
                                          AffineParams{{-1.0, 0.0, 2.0, 0.0, -1.0, 2.0}}};
  for (const auto& p : cases) {
    const Raster out = warp_affine(img, p);
    EXPECT_TRUE(out.all_finite());
    EXPECT_TRUE(out.same_shape(img));
  }
}

TEST(Warp, SamplesOutsideAreZero) {
  const Raster img(4, 4, 1.0f);
  AffineParams far;
  far[2] = 10.0;
  const Raster out = warp_affine(img, far);
  for (float v : out.samples()) EXPECT_EQ(v, 0.0f);
}

TEST(RandomAffine, ZeroBoundsGiveIdentity) {
  const InducedTransform t = random_affine(5, InductionBounds{0.0, 0.0, 0.0}, 240.0);
  EXPECT_EQ(t.params, AffineParams::identity());
}

TEST(RandomAffine, TranslationBoundInNormalizedUnits) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const InducedTransform t = random_affine(seed, InductionBounds{50.0, 0.0, 0.0}, 500.0);
    EXPECT_LE(std::abs(t.params.tx()), 0.1 + 1e-15);
    EXPECT_LE(std::abs(t.params.ty()), 0.1 + 1e-15);
  }
}

TEST(RandomAffine, SameSeedIsBitIdentical) {
  const InducedTransform a = random_affine(42, InductionBounds{}, 240.0);
  const InducedTransform b = random_affine(42, InductionBounds{}, 240.0);
  EXPECT_EQ(a.params, b.params);
  EXPECT_NE(a.params, random_affine(43, InductionBounds{}, 240.0).params);
}

TEST(RandomAffine, ComponentsWithinBoundsForThousandSeeds) {
  const InductionBounds bounds;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const InducedTransform t = random_affine(seed, bounds, 240.0);
    ASSERT_LE(std::abs(t.rotation), bounds.rot_max);
    ASSERT_LE(std::abs(t.shear), bounds.shear_max);
    ASSERT_LE(std::abs(t.tx_px), bounds.trans_max);
    ASSERT_LE(std::abs(t.ty_px), bounds.trans_max);
    ASSERT_TRUE(t.params.all_finite());
  }
}

TEST(RandomAffine, PivotStaysFixedWithoutTranslation) {
  const Eigen::Vector2d pivot(0.4, 0.6);
  const InducedTransform t = random_affine(11, InductionBounds{0.0, 0.3, 0.03}, 100.0, pivot);
  EXPECT_LT((t.params.apply(pivot) - pivot).norm(), 1e-12);
}

TEST(Affine, ComposeWithInverseIsIdentity) {
  const AffineParams m{{0.9, -0.2, 0.05, 0.3, 1.1, -0.07}};
  EXPECT_LT(compose(m, inverse(m)).max_abs_diff(AffineParams::identity()), 1e-12);
  EXPECT_LT(compose(inverse(m), m).max_abs_diff(AffineParams::identity()), 1e-12);
}

TEST(Affine, ComposeAppliesInnerFirst) {
  const AffineParams a{{0.0, -1.0, 0.0, 1.0, 0.0, 0.0}};
  AffineParams b;
  b[2] = 1.0;
  const Eigen::Vector2d p(0.2, 0.7);
  EXPECT_LT((compose(a, b).apply(p) - a.apply(b.apply(p))).norm(), 1e-15);
}

TEST(Affine, PixelSpaceRoundTrip) {
  const AffineParams m{{0.9, -0.2, 0.05, 0.3, 1.1, -0.07}};
  EXPECT_LT(from_pixel_space(to_pixel_space(m, 240.0), 240.0).max_abs_diff(m), 1e-12);
  const Eigen::Matrix3d px = to_pixel_space(m, 200.0);
  const Eigen::Vector3d p(30.0, 50.0, 1.0);
  const Eigen::Vector2d expect = m.apply(Eigen::Vector2d(30.0 / 200.0, 50.0 / 200.0)) * 200.0;
  EXPECT_LT(((px * p).head<2>() - expect).norm(), 1e-10);
}

TEST(Affine, UnpadRecoversOriginalFrame) {
  const int pad = 64;
  const double lo = 240.0;
  const double lp = lo + 2 * pad;
  const AffineParams original{{0.95, -0.3, 0.08, 0.29, 0.97, -0.12}};
  Eigen::Matrix3d shift = Eigen::Matrix3d::Identity();
  shift(0, 2) = shift(1, 2) = pad;
  const Eigen::Matrix3d padded_px = shift * to_pixel_space(original, lo) * shift.inverse();
  const AffineParams padded = from_pixel_space(padded_px, lp);
  EXPECT_LT(unpad_params(padded, pad, lp, lo).max_abs_diff(original), 1e-12);
}

TEST(Raster, RescaleUnit) {
  const Raster out = rescale_unit(Raster(3, 1, {2.0f, 4.0f, 3.0f}));
  EXPECT_FLOAT_EQ(out(0, 0), 0.0f);
  EXPECT_FLOAT_EQ(out(1, 0), 1.0f);
  EXPECT_FLOAT_EQ(out(2, 0), 0.5f);
  const Raster flat = rescale_unit(Raster(2, 2, 5.0f));
  for (float v : flat.samples()) EXPECT_EQ(v, 0.0f);
}

}  // namespace
}  // namespace zsreg
