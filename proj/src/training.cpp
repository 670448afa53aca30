#include "zsreg/training.hpp"

#include "zsreg/error.hpp"
#include "zsreg/estimation.hpp"

#include <array>
#include <cmath>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <numbers>
#include <string>
#include <vector>

namespace zsreg {
namespace {

// Seed-stream offsets so initialization, training batches and validation
// draw from unrelated sequences.
constexpr std::uint64_t kBatchStream = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kValidationStream = 0xC2B2AE3D27D4EB4FULL;

struct ConditionedBatch {
  Eigen::MatrixXf inputs;
  Eigen::MatrixXf targets;  // conditioned-frame parameters
  std::vector<ConditionedSubset> frames;
  std::vector<AffineParams> truths;
};

ConditionedBatch make_batch(std::mt19937_64& rng, std::size_t count, PointLayout layout = PointLayout::uniform) {
  ConditionedBatch batch;
  batch.inputs.resize(kInputWidth, static_cast<Eigen::Index>(count));
  batch.targets.resize(kOutputWidth, static_cast<Eigen::Index>(count));
  batch.frames.reserve(count);
  batch.truths.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    const TrainingSample sample = generate_training_sample(rng, std::nullopt, layout);
    ConditionedSubset cond = condition_input({sample.input.data(), static_cast<std::size_t>(kInputWidth)});
    const AffineParams target = cond.condition_target(sample.target);
    const auto col = static_cast<Eigen::Index>(b);
    batch.inputs.col(col) = cond.input;
    for (int k = 0; k < kOutputWidth; ++k) batch.targets(k, col) = static_cast<float>(target[k]);
    batch.frames.push_back(std::move(cond));
    batch.truths.push_back(sample.target);
  }
  return batch;
}

// Restored-frame squared error summed over parameters, per sample.
void accumulate_errors(const RegressorModel& model, const ConditionedBatch& batch, HeldOutReport& report,
                       double& squared_sum) {
  const Eigen::MatrixXf out = model.forward(batch.inputs);
  for (std::size_t b = 0; b < batch.frames.size(); ++b) {
    AffineParams conditioned;
    for (int k = 0; k < kOutputWidth; ++k) conditioned[k] = out(k, static_cast<Eigen::Index>(b));
    const AffineParams estimate = batch.frames[b].restore(conditioned);
    for (std::size_t k = 0; k < 6; ++k) {
      const double e = std::abs(estimate[k] - batch.truths[b][k]);
      squared_sum += e * e;
      report.per_parameter_max[k] = std::max(report.per_parameter_max[k], e);
      report.max_abs_error = std::max(report.max_abs_error, e);
    }
  }
}

class Adam {
 public:
  Adam(const RegressorModel& shape) : first_(zeros_like(shape)), second_(zeros_like(shape)) {}

  void step(RegressorModel& model, const RegressorGradient<float>& grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    const float step = static_cast<float>(lr * std::sqrt(c2) / c1);
    auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
      m = kBeta1 * m + (1.0f - kBeta1) * g;
      v = kBeta2 * v + (1.0f - kBeta2) * g.cwiseAbs2();
      param.array() -= step * m.array() / (v.array().sqrt() + kEpsilon * static_cast<float>(std::sqrt(c2)));
    };
    for (std::size_t l = 0; l < model.encoder.size(); ++l) {
      update(model.encoder[l].weights, grad.encoder[l].weights, first_.encoder[l].weights, second_.encoder[l].weights);
      update(model.encoder[l].biases, grad.encoder[l].biases, first_.encoder[l].biases, second_.encoder[l].biases);
    }
    for (std::size_t l = 0; l < model.head.size(); ++l) {
      update(model.head[l].weights, grad.head[l].weights, first_.head[l].weights, second_.head[l].weights);
      update(model.head[l].biases, grad.head[l].biases, first_.head[l].biases, second_.head[l].biases);
    }
  }

 private:
  static constexpr float kBeta1 = 0.9f;
  static constexpr float kBeta2 = 0.999f;
  static constexpr float kEpsilon = 1e-8f;

  static RegressorModel zeros_like(const RegressorModel& shape) {
    RegressorModel z = shape;
    for (auto* group : {&z.encoder, &z.head}) {
      for (auto& l : *group) {
        l.weights.setZero();
        l.biases.setZero();
      }
    }
    return z;
  }

  RegressorModel first_;
  RegressorModel second_;
  int t_ = 0;
};

// Log-uniform draw on [lo, hi].
double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo * std::pow(hi / lo, std::uniform_real_distribution<double>(0.0, 1.0)(rng));
}

void varied_points(std::mt19937_64& rng, std::array<Eigen::Vector2d, kSubsetSize>& points) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto rotation = [&] {
    const double a = unit(rng) * std::numbers::pi;
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
  };
  const Eigen::Vector2d center(0.2 + 0.6 * unit(rng), 0.2 + 0.6 * unit(rng));

  // Distinct points first; resampling below may repeat them.
  const int distinct = unit(rng) < 0.5 ? kSubsetSize : std::uniform_int_distribution<int>(3, kSubsetSize)(rng);
  std::vector<Eigen::Vector2d> base(static_cast<std::size_t>(distinct));
  const double mode = unit(rng);
  if (mode < 0.3) {
    for (auto& p : base) p = Eigen::Vector2d(unit(rng), unit(rng));
  } else if (mode < 0.55) {
    const double major = log_uniform(rng, 0.005, 0.3);
    const Eigen::Matrix2d shape =
        rotation() * Eigen::Vector2d(major, major / log_uniform(rng, 1.0, 50.0)).asDiagonal();
    for (auto& p : base) p = center + shape * Eigen::Vector2d(normal(rng), normal(rng));
  } else if (mode < 0.8) {
    // Quadratic Bezier with perpendicular jitter.
    const double reach = log_uniform(rng, 0.01, 0.5);
    const Eigen::Vector2d a = center + reach * Eigen::Vector2d(normal(rng), normal(rng));
    const Eigen::Vector2d b = center + reach * Eigen::Vector2d(normal(rng), normal(rng));
    const Eigen::Vector2d c = center + reach * Eigen::Vector2d(normal(rng), normal(rng));
    const double jitter = reach * log_uniform(rng, 0.002, 0.2);
    for (auto& p : base) {
      const double t = unit(rng);
      p = (1 - t) * (1 - t) * a + 2 * t * (1 - t) * b + t * t * c +
          jitter * Eigen::Vector2d(normal(rng), normal(rng));
    }
  } else {
    const int clusters = std::uniform_int_distribution<int>(2, 5)(rng);
    std::vector<Eigen::Vector2d> centers;
    for (int k = 0; k < clusters; ++k) centers.push_back(center + 0.2 * Eigen::Vector2d(normal(rng), normal(rng)));
    const double spread = log_uniform(rng, 0.002, 0.05);
    for (auto& p : base) {
      p = centers[std::uniform_int_distribution<std::size_t>(0, centers.size() - 1)(rng)] +
          spread * Eigen::Vector2d(normal(rng), normal(rng));
    }
  }

  std::uniform_int_distribution<int> pick(0, distinct - 1);
  for (int i = 0; i < kSubsetSize; ++i) points[i] = base[distinct == kSubsetSize ? i : pick(rng)];
  if (unit(rng) < 0.3) {
    const int outliers = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int k = 0; k < outliers; ++k) {
      points[std::uniform_int_distribution<int>(0, kSubsetSize - 1)(rng)] = Eigen::Vector2d(unit(rng), unit(rng));
    }
  }
  for (auto& p : points) p = p.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace

TrainingSample generate_training_sample(std::mt19937_64& rng, const std::optional<AffineParams>& forced,
                                        PointLayout layout) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> symmetric(-1.0, 1.0);
  TrainingSample sample;
  sample.input.resize(kInputWidth);
  std::array<Eigen::Vector2d, kSubsetSize> points;
  if (layout == PointLayout::uniform) {
    for (auto& p : points) {
      p.x() = unit(rng);
      p.y() = unit(rng);
    }
  } else {
    varied_points(rng, points);
  }
  if (forced) {
    sample.target = *forced;
  } else {
    for (std::size_t k = 0; k < 6; ++k) sample.target[k] = symmetric(rng);
  }
  for (int i = 0; i < kSubsetSize; ++i) {
    const Eigen::Vector2d y = sample.target.apply(points[i]);
    sample.input(2 * i) = static_cast<float>(points[i].x());
    sample.input(2 * i + 1) = static_cast<float>(points[i].y());
    sample.input(2 * kSubsetSize + 2 * i) = static_cast<float>(y.x());
    sample.input(2 * kSubsetSize + 2 * i + 1) = static_cast<float>(y.y());
  }
  return sample;
}

TrainingSample generate_training_sample(std::uint64_t seed, const std::optional<AffineParams>& forced,
                                        PointLayout layout) {
  std::mt19937_64 rng(seed);
  return generate_training_sample(rng, forced, layout);
}

RegressorModel initial_regressor(const TrainingConfig& config) {
  std::mt19937_64 rng(config.seed);
  return config.architecture == Architecture::pooled
             ? make_pooled_regressor(config.encoder_widths, config.head_widths, rng)
             : make_dense_regressor(config.dense_widths, rng);
}

TrainingResult train_regressor(const TrainingConfig& config) {
#if defined(__GLIBC__)
  // Per-step activations are several MB; keep them off mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  if (config.batch_size < 1) throw Error("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw Error("learning rate must be positive");
  TrainingResult result;
  result.model = initial_regressor(config);

  std::mt19937_64 validation_rng(config.seed ^ kValidationStream);
  const ConditionedBatch validation = make_batch(validation_rng, std::max<std::size_t>(config.validation_samples, 1));

  auto validate = [&](EpochRecord& rec) {
    const Eigen::MatrixXf out = result.model.forward(validation.inputs);
    rec.validation_loss = (out - validation.targets).squaredNorm() / static_cast<double>(out.size());
    HeldOutReport report;
    double squared = 0.0;
    accumulate_errors(result.model, validation, report, squared);
    rec.validation_rmse = std::sqrt(squared / (6.0 * static_cast<double>(validation.frames.size())));
    if (!std::isfinite(rec.validation_loss)) {
      throw TrainingDiverged("validation loss is not finite after epoch " + std::to_string(rec.epoch));
    }
  };

  const std::size_t steps_per_epoch =
      std::max<std::size_t>(1, config.samples_per_epoch / static_cast<std::size_t>(config.batch_size));
  const double total_steps = static_cast<double>(steps_per_epoch) * std::max(config.epochs, 0);
  std::mt19937_64 batch_rng(config.seed ^ kBatchStream);
  Adam optimizer(result.model);
  RegressorGradient<float> grad;
  std::size_t step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      const ConditionedBatch batch = make_batch(batch_rng, static_cast<std::size_t>(config.batch_size), config.layout);
      const float loss = regressor_loss(result.model, batch.inputs, batch.targets, &grad);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("training loss became non-finite at step " + std::to_string(step));
      }
      const double progress = static_cast<double>(step) / total_steps;
      const double decay = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
      const double lr = config.learning_rate * (config.final_lr_fraction + (1.0 - config.final_lr_fraction) * decay);
      optimizer.step(result.model, grad, lr);
      result.batch_losses.push_back(loss);
      epoch_loss += loss;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(steps_per_epoch);
    validate(rec);
    result.epochs.push_back(rec);
  }

  result.trained = step > 0;
  EpochRecord final_rec;
  validate(final_rec);
  result.validation_loss = final_rec.validation_loss;
  result.validation_rmse = final_rec.validation_rmse;
  return result;
}

HeldOutReport evaluate_held_out(const RegressorModel& model, std::size_t count, std::uint64_t seed,
                                PointLayout layout) {
  std::mt19937_64 rng(seed);
  HeldOutReport report;
  double squared = 0.0;
  constexpr std::size_t kChunk = 1000;
  for (std::size_t done = 0; done < count; done += kChunk) {
    const ConditionedBatch batch = make_batch(rng, std::min(kChunk, count - done), layout);
    accumulate_errors(model, batch, report, squared);
  }
  report.rmse = std::sqrt(squared / (6.0 * static_cast<double>(std::max<std::size_t>(count, 1))));
  return report;
}

}  // namespace zsreg
