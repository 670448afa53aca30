#include "zsreg/uncertainty.hpp"

#include "zsreg/error.hpp"
#include "zsreg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>

namespace zsreg {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> blacken_indices(std::size_t pixel_count, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw Error("blacken fraction must lie in [0, 1)");
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pixel_count)));
  std::vector<std::size_t> order(pixel_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `count` slots end up a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pixel_count - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(count);
  return order;
}

Raster blacken(const Raster& img, double fraction, std::uint64_t seed) {
  Raster out = img;
  auto s = out.samples();
  for (std::size_t i : blacken_indices(s.size(), fraction, seed)) s[i] = 0.0f;
  return out;
}

UncertaintyReport estimate_uncertainty(const Raster& fixed, const Raster& moving, const SubsetPredictor& predict,
                                       const FilterBank& bank, const UncertaintyOptions& uncertainty,
                                       const RegisterOptions& options) {
  if (uncertainty.trials < 2) throw Error("uncertainty needs at least 2 trials");
  if (!fixed.same_shape(moving)) throw DimensionMismatch("fixed and moving images differ in size");

  const PreparedImage f = prepare_image(fixed, bank, options);
  const Raster moving_unit = rescale_unit(moving);
  const Raster moving_pre = preprocess(moving, options.pad);
  const int pad = options.pad;

  struct Trial {
    std::optional<AffineParams> estimate;
    Raster warped;
  };
  std::vector<Trial> trials(static_cast<std::size_t>(uncertainty.trials));
  parallel_for(trials.size(), [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(uncertainty.seed, t);
    const auto holes = blacken_indices(moving_pre.size(), uncertainty.fraction, trial_seed);
    Raster pre = moving_pre;
    Raster unit = moving_unit;
    for (std::size_t idx : holes) {
      pre.samples()[idx] = 0.0f;
      const int col = static_cast<int>(idx % static_cast<std::size_t>(pre.width())) - pad;
      const int row = static_cast<int>(idx / static_cast<std::size_t>(pre.width())) - pad;
      if (col >= 0 && row >= 0 && col < unit.width() && row < unit.height()) unit(col, row) = 0.0f;
    }
    try {
      const KeypointSet kp = keypoints_for(pre, bank, options.threshold_fraction);
      const AffineParams estimate = estimate_from_keypoints(f.keypoints, kp, predict, options, fixed.extent());
      trials[t].warped = warp_affine(unit, estimate);
      trials[t].estimate = estimate;
    } catch (const InsufficientCorrespondences&) {
      // A trial whose keypoints were wiped out is dropped.
    } catch (const DegenerateGeometry&) {
    }
  });

  UncertaintyReport report;
  std::vector<const Trial*> ok;
  for (const auto& t : trials) {
    if (t.estimate) ok.push_back(&t);
  }
  if (ok.size() < 2) {
    throw InsufficientCorrespondences("uncertainty: only " + std::to_string(ok.size()) +
                                      " trials produced an estimate, need 2");
  }
  report.n_trials = static_cast<int>(ok.size());
  const double n = static_cast<double>(ok.size());
  for (const Trial* t : ok) report.estimates.push_back(*t->estimate);

  // Deviations are taken from the first trial so identical trials give exactly 0.
  const auto variance = [n](auto&& value_of) {
    const double shift = value_of(0);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t t = 0; t < static_cast<std::size_t>(n); ++t) {
      const double d = value_of(t) - shift;
      sum += d;
      sum_sq += d * d;
    }
    return std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  };
  for (std::size_t k = 0; k < 6; ++k) {
    report.param_variance[k] = variance([&](std::size_t t) { return report.estimates[t][k]; });
  }

  report.variance_map = Raster(fixed.width(), fixed.height(), 0.0f);
  auto var = report.variance_map.samples();
  for (std::size_t i = 0; i < var.size(); ++i) {
    var[i] = static_cast<float>(variance([&](std::size_t t) { return double{ok[t]->warped.samples()[i]}; }));
  }
  return report;
}

UncertaintyReport estimate_uncertainty(const Raster& fixed, const Raster& moving, const RegressorModel& model,
                                       const FilterBank& bank, const UncertaintyOptions& uncertainty,
                                       const RegisterOptions& options) {
  return estimate_uncertainty(fixed, moving, model_predictor(model), bank, uncertainty, options);
}

}  // namespace zsreg
