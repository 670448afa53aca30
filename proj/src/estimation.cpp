#include "zsreg/estimation.hpp"

#include "zsreg/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace zsreg {
namespace {

constexpr double kMinVariance = 1e-12;
constexpr double kMinScale = 1e-6;

template <typename FixedAt, typename MovingAt>
ConditionedSubset condition(int n, FixedAt fixed_at, MovingAt moving_at) {
  Eigen::Vector2d mu_x = Eigen::Vector2d::Zero();
  Eigen::Vector2d mu_y = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    mu_x += fixed_at(i);
    mu_y += moving_at(i);
  }
  mu_x /= n;
  mu_y /= n;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  double spread = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d dx = fixed_at(i) - mu_x;
    cov += dx * dx.transpose();
    spread += (moving_at(i) - mu_y).squaredNorm();
  }
  cov /= n;
  const double scale = std::max(std::sqrt(spread / (2.0 * n)), kMinScale);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Eigen::Vector2d inv_sqrt = eig.eigenvalues().cwiseMax(kMinVariance).cwiseSqrt().cwiseInverse();
  const Eigen::Matrix2d whiten = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();

  ConditionedSubset out;
  out.fixed_frame.setIdentity();
  out.fixed_frame.topLeftCorner<2, 2>() = whiten;
  out.fixed_frame.topRightCorner<2, 1>() = -whiten * mu_x;
  out.moving_unframe.setIdentity();
  out.moving_unframe(0, 0) = out.moving_unframe(1, 1) = scale;
  out.moving_unframe.topRightCorner<2, 1>() = mu_y;

  out.input.resize(kInputWidth);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d x = whiten * (fixed_at(i) - mu_x);
    const Eigen::Vector2d y = (moving_at(i) - mu_y) / scale;
    out.input(2 * i) = static_cast<float>(x.x());
    out.input(2 * i + 1) = static_cast<float>(x.y());
    out.input(2 * kSubsetSize + 2 * i) = static_cast<float>(y.x());
    out.input(2 * kSubsetSize + 2 * i + 1) = static_cast<float>(y.y());
  }
  return out;
}

}  // namespace

AffineParams ConditionedSubset::restore(const AffineParams& conditioned) const {
  return AffineParams::from_matrix(moving_unframe * conditioned.matrix() * fixed_frame);
}

AffineParams ConditionedSubset::condition_target(const AffineParams& m) const {
  return AffineParams::from_matrix(moving_unframe.inverse() * m.matrix() * fixed_frame.inverse());
}

ConditionedSubset condition_input(std::span<const float> raw) {
  if (raw.size() != static_cast<std::size_t>(kInputWidth)) {
    throw DimensionMismatch("regressor input must hold " + std::to_string(kInputWidth) + " values");
  }
  return condition(
      kSubsetSize, [&](int i) { return Eigen::Vector2d(raw[2 * i], raw[2 * i + 1]); },
      [&](int i) {
        return Eigen::Vector2d(raw[2 * kSubsetSize + 2 * i], raw[2 * kSubsetSize + 2 * i + 1]);
      });
}

ConditionedSubset condition_subset(std::span<const Correspondence> subset) {
  if (subset.size() != static_cast<std::size_t>(kSubsetSize)) {
    throw DimensionMismatch("regressor subsets hold exactly " + std::to_string(kSubsetSize) +
                            " correspondences, got " + std::to_string(subset.size()));
  }
  return condition(
      kSubsetSize, [&](int i) { return subset[i].fixed; }, [&](int i) { return subset[i].moving; });
}

Eigen::VectorXf pack_subset(std::span<const Correspondence> subset) {
  if (subset.size() != static_cast<std::size_t>(kSubsetSize)) {
    throw DimensionMismatch("regressor subsets hold exactly " + std::to_string(kSubsetSize) +
                            " correspondences, got " + std::to_string(subset.size()));
  }
  Eigen::VectorXf v(kInputWidth);
  for (int i = 0; i < kSubsetSize; ++i) {
    v(2 * i) = static_cast<float>(subset[i].fixed.x());
    v(2 * i + 1) = static_cast<float>(subset[i].fixed.y());
    v(2 * kSubsetSize + 2 * i) = static_cast<float>(subset[i].moving.x());
    v(2 * kSubsetSize + 2 * i + 1) = static_cast<float>(subset[i].moving.y());
  }
  return v;
}

AffineParams predict_params(const RegressorModel& model, std::span<const Correspondence> subset) {
  const ConditionedSubset cond = condition_subset(subset);
  const Eigen::MatrixXf out = model.forward(cond.input);
  AffineParams conditioned;
  for (int k = 0; k < kOutputWidth; ++k) conditioned[k] = out(k, 0);
  return cond.restore(conditioned);
}

AffineParams bootstrap_estimate(const SubsetPredictor& predict, const CorrespondenceList& corr,
                                std::uint64_t seed) {
  if (corr.size() < kMinCorrespondences) {
    throw InsufficientCorrespondences("bootstrap needs at least " + std::to_string(kMinCorrespondences) +
                                      " correspondences, got " + std::to_string(corr.size()));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, corr.size() - 1);
  std::vector<Correspondence> subset(kSubsetSize);
  AffineParams mean;
  for (int s = 0; s < kBootstrapSets; ++s) {
    for (auto& c : subset) c = corr[pick(rng)];
    const AffineParams p = predict(subset);
    // Running mean: averaging identical predictions reproduces them exactly.
    for (std::size_t k = 0; k < 6; ++k) {
      mean[k] = s == 0 ? p[k] : mean[k] + (p[k] - mean[k]) / (s + 1);
    }
  }
  return mean;
}

AffineParams bootstrap_estimate(const RegressorModel& model, const CorrespondenceList& corr,
                                std::uint64_t seed) {
  return bootstrap_estimate(
      [&model](std::span<const Correspondence> subset) { return predict_params(model, subset); }, corr,
      seed);
}

AffineParams least_squares_fit(std::span<const Correspondence> corr) {
  if (corr.size() < 3) {
    throw DegenerateGeometry("affine fit needs at least 3 correspondences, got " +
                             std::to_string(corr.size()));
  }
  const double n = static_cast<double>(corr.size());
  Eigen::Vector2d mu_x = Eigen::Vector2d::Zero();
  Eigen::Vector2d mu_y = Eigen::Vector2d::Zero();
  for (const auto& c : corr) {
    mu_x += c.fixed;
    mu_y += c.moving;
  }
  mu_x /= n;
  mu_y /= n;
  // Normal equations in centered coordinates: A Sxx = Syx, t = mu_y - A mu_x.
  Eigen::Matrix2d sxx = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d syx = Eigen::Matrix2d::Zero();
  for (const auto& c : corr) {
    const Eigen::Vector2d dx = c.fixed - mu_x;
    sxx += dx * dx.transpose();
    syx += (c.moving - mu_y) * dx.transpose();
  }
  const double trace = sxx.trace();
  if (!(trace > 0.0) || sxx.determinant() <= 1e-12 * trace * trace) {
    throw DegenerateGeometry("fixed points are collinear; affine fit is rank-deficient");
  }
  const Eigen::Matrix2d a = sxx.ldlt().solve(syx.transpose()).transpose();
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m.topLeftCorner<2, 2>() = a;
  m.topRightCorner<2, 1>() = mu_y - a * mu_x;
  return AffineParams::from_matrix(m);
}

namespace {

std::vector<std::size_t> inliers_of(const AffineParams& m, const CorrespondenceList& corr, double tolerance) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    if ((m.apply(corr[i].fixed) - corr[i].moving).norm() <= tolerance) keep.push_back(i);
  }
  return keep;
}

}  // namespace

CorrespondenceList screen_correspondences(const CorrespondenceList& corr, double tolerance, std::uint64_t seed,
                                          int trials) {
  if (corr.size() < 3) return corr;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, corr.size() - 1);
  std::vector<std::size_t> best;
  for (int t = 0; t < trials; ++t) {
    const std::array<Correspondence, 3> triple{corr[pick(rng)], corr[pick(rng)], corr[pick(rng)]};
    const Eigen::Vector2d e1 = triple[1].fixed - triple[0].fixed;
    const Eigen::Vector2d e2 = triple[2].fixed - triple[0].fixed;
    if (std::abs(e1.x() * e2.y() - e1.y() * e2.x()) < tolerance * tolerance) continue;
    std::vector<std::size_t> keep;
    try {
      keep = inliers_of(least_squares_fit(triple), corr, tolerance);
    } catch (const DegenerateGeometry&) {
      continue;
    }
    if (keep.size() > best.size()) best = std::move(keep);
  }
  if (best.size() < kMinCorrespondences) return corr;

  CorrespondenceList subset;
  for (std::size_t i : best) subset.push_back(corr[i]);
  try {
    best = inliers_of(least_squares_fit(subset), corr, tolerance);
  } catch (const DegenerateGeometry&) {
    return subset;
  }
  if (best.size() < kMinCorrespondences) return subset;
  subset.clear();
  for (std::size_t i : best) subset.push_back(corr[i]);
  return subset;
}

}  // namespace zsreg
