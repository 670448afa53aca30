#include "support.hpp"

#include "zsreg/conv_features.hpp"
#include "zsreg/error.hpp"
#include "zsreg/phantom.hpp"
#include "zsreg/registration.hpp"
#include "zsreg/regressor.hpp"

#include <gtest/gtest.h>

namespace zsreg {
namespace {

class Registration : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { bank_ = new FilterBank(builtin_filter_bank()); }
  static void TearDownTestSuite() {
    delete bank_;
    bank_ = nullptr;
  }
  static const FilterBank& bank() { return *bank_; }
  static FilterBank* bank_;
};
FilterBank* Registration::bank_ = nullptr;

PhantomOptions sized(int n) {
  PhantomOptions o;
  o.width = n;
  o.height = n;
  return o;
}

Raster induced(const Raster& fixed, std::uint64_t seed, InductionBounds bounds = {}) {
  const double scale = fixed.extent() / 240.0;
  bounds.trans_max *= scale;
  return warp_affine(fixed, random_affine(seed, bounds, fixed.extent(), image_center(fixed)).params);
}

TEST_F(Registration, SelfRegistrationWithOracle) {
  const Raster img = make_phantom(1, sized(128));
  const RegistrationResult r = register_images(img, img, test::least_squares_predictor(), bank());
  EXPECT_LE(r.params.max_abs_diff(AffineParams::identity()), 1e-6);
  EXPECT_GE(r.after.dice, 0.99);
  EXPECT_GE(r.after.ssim, 0.98);
  EXPECT_LE(r.after.mse, 1e-3);
  EXPECT_EQ(r.warped.width(), 128);
  EXPECT_GE(r.correspondences, static_cast<std::size_t>(kMinCorrespondences));
}

TEST_F(Registration, SelfRegistrationWithShippedModel) {
  const RegressorModel model = load_regressor(test::shipped_model());
  const Raster img = make_phantom(2);
  const RegistrationResult r = register_images(img, img, model, bank());
  EXPECT_LE(r.params.max_abs_diff(AffineParams::identity()), 0.02);
  EXPECT_GE(r.after.dice, 0.99);
  EXPECT_GE(r.after.ssim, 0.98);
  EXPECT_LE(r.after.mse, 1e-3);
}

TEST_F(Registration, RecoversKnownTransform) {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Raster fixed = make_phantom(100 + seed, sized(160));
    const InducedTransform t =
        random_affine(seed, InductionBounds{50.0 * 160 / 240, 0.3, 0.03}, fixed.extent(), image_center(fixed));
    const Raster moving = warp_affine(fixed, t.params);
    const RegistrationResult r = register_images(fixed, moving, test::least_squares_predictor(), bank());
    improved += r.after.dice > r.before.dice;
    // The true fixed -> moving map is the inverse of the backward warp.
    EXPECT_LE(r.params.max_abs_diff(inverse(t.params)), 0.05) << "seed " << seed;
    EXPECT_LT(r.after.mse, r.before.mse);
  }
  EXPECT_EQ(improved, 6);
}

TEST_F(Registration, DimensionMismatch) {
  EXPECT_THROW(register_images(Raster(40, 40, 0.5f), Raster(40, 41, 0.5f), test::least_squares_predictor(), bank()),
               DimensionMismatch);
}

TEST_F(Registration, BlankImageHasNoKeypoints) {
  const Raster blank(64, 64, 0.0f);
  EXPECT_THROW(register_images(blank, blank, test::least_squares_predictor(), bank()), InsufficientCorrespondences);
}

TEST_F(Registration, DeterministicPerSeed) {
  const Raster fixed = make_phantom(7, sized(128));
  const Raster moving = induced(fixed, 8);
  RegisterOptions o;
  o.seed = 5;
  const RegistrationResult a = register_images(fixed, moving, test::least_squares_predictor(), bank(), o);
  const RegistrationResult b = register_images(fixed, moving, test::least_squares_predictor(), bank(), o);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.warped, b.warped);
}

TEST_F(Registration, ScreeningOffStillRuns) {
  const Raster img = make_phantom(9, sized(128));
  RegisterOptions o;
  o.screen_tolerance_px = 0.0;
  const RegistrationResult r = register_images(img, img, test::least_squares_predictor(), bank(), o);
  EXPECT_LE(r.params.max_abs_diff(AffineParams::identity()), 1e-6);
}

TEST_F(Registration, TimingsRecorded) {
  const Raster img = make_phantom(10, sized(128));
  const RegistrationResult r = register_images(img, induced(img, 11), test::least_squares_predictor(), bank());
  EXPECT_GT(r.timings.conv_ms, 0.0);
  EXPECT_GT(r.timings.total_ms(), r.timings.conv_ms);
}

TEST_F(Registration, IterativeSingleFullStepEqualsSingleShot) {
  const Raster fixed = make_phantom(12, sized(128));
  const Raster moving = induced(fixed, 13);
  IterativeOptions it;
  it.learning_rate = 1.0;
  it.max_iters = 1;
  const auto single = register_images(fixed, moving, test::least_squares_predictor(), bank());
  const auto iter = iterative_register(fixed, moving, test::least_squares_predictor(), bank(), it);
  EXPECT_EQ(iter.iterations, 1);
  EXPECT_LE(iter.params.max_abs_diff(single.params), 1e-12);
  EXPECT_EQ(iter.final.warped, single.warped);
}

TEST_F(Registration, IterativeConvergesImmediatelyOnIdenticalImages) {
  const Raster img = make_phantom(14, sized(128));
  const auto r = iterative_register(img, img, test::least_squares_predictor(), bank(), {});
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.converged);
}

TEST_F(Registration, IterativeHandlesLargeTranslation) {
  const RegressorModel model = load_regressor(test::shipped_model());
  const Raster fixed = make_phantom(15);
  const Raster moving = warp_affine(fixed, make_affine(0.0, 0.0, 50.0 / 240.0, 0.0, image_center(fixed)));
  const auto single = register_images(fixed, moving, model, bank());
  IterativeOptions it;
  it.learning_rate = 0.5;
  it.max_iters = 10;
  const auto iter = iterative_register(fixed, moving, model, bank(), it);
  EXPECT_GE(iter.final.after.dice, single.after.dice);
  EXPECT_GT(iter.final.after.dice, iter.final.before.dice);
}

}  // namespace
}  // namespace zsreg
