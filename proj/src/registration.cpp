#include "zsreg/registration.hpp"

#include "zsreg/error.hpp"

#include <chrono>
#include <string>

namespace zsreg {
namespace {

constexpr std::uint64_t kScreeningStream = 0xD1B54A32D192ED03ULL;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - start_).count();
    start_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void require_same_size(const Raster& fixed, const Raster& moving) {
  if (!fixed.same_shape(moving)) {
    throw DimensionMismatch("fixed and moving images differ in size: " + std::to_string(fixed.width()) + "x" +
                            std::to_string(fixed.height()) + " vs " + std::to_string(moving.width()) + "x" +
                            std::to_string(moving.height()));
  }
}

AffineParams lerp_from_identity(const AffineParams& residual, double lr) {
  const AffineParams id = AffineParams::identity();
  AffineParams out;
  for (std::size_t k = 0; k < 6; ++k) out[k] = (1.0 - lr) * id[k] + lr * residual[k];
  return out;
}

}  // namespace

SubsetPredictor model_predictor(const RegressorModel& model) {
  return [&model](std::span<const Correspondence> subset) { return predict_params(model, subset); };
}

KeypointSet keypoints_for(const Raster& preprocessed, const FilterBank& bank, double threshold_fraction,
                          StageTimings* timings) {
  Stopwatch watch;
  const FeatureStack stack = extract_features(preprocessed, bank);
  if (timings) timings->conv_ms += watch.lap_ms();
  KeypointSet keypoints = extract_keypoints(stack, preprocessed.extent(), threshold_fraction);
  if (timings) timings->com_ms += watch.lap_ms();
  return keypoints;
}

PreparedImage prepare_image(const Raster& img, const FilterBank& bank, const RegisterOptions& options,
                            StageTimings* timings) {
  Stopwatch watch;
  PreparedImage prepared;
  prepared.unit = rescale_unit(img);
  prepared.preprocessed = preprocess(img, options.pad);
  if (timings) timings->preprocess_ms += watch.lap_ms();
  prepared.keypoints = keypoints_for(prepared.preprocessed, bank, options.threshold_fraction, timings);
  return prepared;
}

AffineParams estimate_from_keypoints(const KeypointSet& fixed, const KeypointSet& moving,
                                     const SubsetPredictor& predict, const RegisterOptions& options,
                                     double original_extent, std::size_t* pair_count) {
  CorrespondenceList pairs = pair_keypoints(fixed, moving);
  if (options.screen_tolerance_px > 0.0) {
    pairs = screen_correspondences(pairs, options.screen_tolerance_px / fixed.source_extent,
                                   options.seed ^ kScreeningStream);
  }
  if (pair_count) *pair_count = pairs.size();
  const AffineParams padded = bootstrap_estimate(predict, pairs, options.seed);
  return unpad_params(padded, options.pad, fixed.source_extent, original_extent);
}

RegistrationResult register_images(const Raster& fixed, const Raster& moving, const SubsetPredictor& predict,
                                   const FilterBank& bank, const RegisterOptions& options) {
  require_same_size(fixed, moving);
  RegistrationResult result;
  const PreparedImage f = prepare_image(fixed, bank, options, &result.timings);
  const PreparedImage m = prepare_image(moving, bank, options, &result.timings);

  Stopwatch watch;
  result.params = estimate_from_keypoints(f.keypoints, m.keypoints, predict, options, fixed.extent(),
                                          &result.correspondences);
  result.timings.estimate_ms += watch.lap_ms();

  result.warped = warp_affine(m.unit, result.params);
  result.timings.warp_ms += watch.lap_ms();

  result.before = compute_metrics(f.unit, m.unit, options.fg_threshold);
  result.after = compute_metrics(f.unit, result.warped, options.fg_threshold);
  result.timings.metrics_ms += watch.lap_ms();

  result.fixed_keypoints = f.keypoints;
  result.moving_keypoints = m.keypoints;
  return result;
}

RegistrationResult register_images(const Raster& fixed, const Raster& moving, const RegressorModel& model,
                                   const FilterBank& bank, const RegisterOptions& options) {
  return register_images(fixed, moving, model_predictor(model), bank, options);
}

IterativeResult iterative_register(const Raster& fixed, const Raster& moving, const SubsetPredictor& predict,
                                   const FilterBank& bank, const IterativeOptions& iterative,
                                   const RegisterOptions& options) {
  if (!(iterative.learning_rate > 0.0 && iterative.learning_rate <= 1.0)) {
    throw Error("iterative learning rate must lie in (0, 1]");
  }
  if (iterative.max_iters < 1) throw Error("iterative registration needs at least one iteration");
  require_same_size(fixed, moving);

  IterativeResult out;
  RegistrationResult& final = out.final;
  const PreparedImage f = prepare_image(fixed, bank, options, &final.timings);
  const Raster moving_unit = rescale_unit(moving);
  AffineParams accumulated = AffineParams::identity();

  for (int it = 1; it <= iterative.max_iters; ++it) {
    Stopwatch watch;
    // current(p) = moving(accumulated p); identity warp is exact on the first pass.
    const Raster current = it == 1 ? moving : warp_affine(moving, accumulated);
    const Raster current_pre = preprocess(current, options.pad);
    final.timings.preprocess_ms += watch.lap_ms();
    const KeypointSet current_kp = keypoints_for(current_pre, bank, options.threshold_fraction, &final.timings);

    watch.lap_ms();
    RegisterOptions step_options = options;
    step_options.seed = options.seed + static_cast<std::uint64_t>(it - 1);
    const AffineParams residual = estimate_from_keypoints(f.keypoints, current_kp, predict, step_options,
                                                          fixed.extent(), &final.correspondences);
    final.timings.estimate_ms += watch.lap_ms();

    out.residuals.push_back(residual);
    out.iterations = it;
    accumulated = compose(accumulated, lerp_from_identity(residual, iterative.learning_rate));
    if (it == 1) {
      final.fixed_keypoints = f.keypoints;
      final.moving_keypoints = current_kp;
    }
    if (residual.max_abs_diff(AffineParams::identity()) <= iterative.tolerance) {
      out.converged = true;
      break;
    }
  }

  Stopwatch watch;
  out.params = accumulated;
  final.params = accumulated;
  final.warped = warp_affine(moving_unit, accumulated);
  final.timings.warp_ms += watch.lap_ms();
  final.before = compute_metrics(f.unit, moving_unit, options.fg_threshold);
  final.after = compute_metrics(f.unit, final.warped, options.fg_threshold);
  final.timings.metrics_ms += watch.lap_ms();
  return out;
}

IterativeResult iterative_register(const Raster& fixed, const Raster& moving, const RegressorModel& model,
                                   const FilterBank& bank, const IterativeOptions& iterative,
                                   const RegisterOptions& options) {
  return iterative_register(fixed, moving, model_predictor(model), bank, iterative, options);
}

}  // namespace zsreg
