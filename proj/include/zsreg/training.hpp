#pragma once

#include "zsreg/raster.hpp"
#include "zsreg/regressor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace zsreg {

struct TrainingSample {
  Eigen::VectorXf input;  // kInputWidth: X_1..X_64 then Y_1..Y_64
  AffineParams target;    // the M with Y_i = M [X_i, 1]
};

// Where the 64 fixed points come from.
//   uniform: X_i ~ U(0,1)^2
//   varied:  a mix of uniform sets, anisotropic Gaussian blobs, noisy curves
//            and small clusters, optionally resampled with replacement from
//            a few distinct points and salted with uniform outliers; all
//            clamped to [0,1]^2. Mimics CoM keypoint layouts.
enum class PointLayout { uniform, varied };

// All six entries of M ~ U(-1,1) unless `forced` supplies M; Y_i = M [X_i, 1].
TrainingSample generate_training_sample(std::mt19937_64& rng,
                                        const std::optional<AffineParams>& forced = std::nullopt,
                                        PointLayout layout = PointLayout::uniform);
TrainingSample generate_training_sample(std::uint64_t seed,
                                        const std::optional<AffineParams>& forced = std::nullopt,
                                        PointLayout layout = PointLayout::uniform);

enum class Architecture { pooled, dense };

struct TrainingConfig {
  Architecture architecture = Architecture::pooled;
  std::vector<int> encoder_widths{64, 64};
  std::vector<int> head_widths{128, 64};
  std::vector<int> dense_widths{256, 128, 64};
  std::size_t samples_per_epoch = 500'000;
  int epochs = 20;
  int batch_size = 256;
  double learning_rate = 4e-3;
  // Cosine decay from learning_rate to learning_rate * final_lr_fraction.
  double final_lr_fraction = 0.01;
  std::uint64_t seed = 1;
  std::size_t validation_samples = 10'000;  // uniform layout
  PointLayout layout = PointLayout::varied;  // training batches
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;       // mean batch loss over the epoch (conditioned frame)
  double validation_loss = 0.0;  // conditioned frame
  double validation_rmse = 0.0;  // per-parameter RMSE of the restored M
};

struct TrainingResult {
  RegressorModel model;
  std::vector<EpochRecord> epochs;
  std::vector<float> batch_losses;
  double validation_loss = 0.0;
  double validation_rmse = 0.0;
  bool trained = false;  // false when no optimizer step ran
};

// Minimizes the mean squared parameter error on freshly generated batches
// with the Adam optimizer. Deterministic for a given config. Throws
// TrainingDiverged if a loss becomes non-finite.
TrainingResult train_regressor(const TrainingConfig& config);

RegressorModel initial_regressor(const TrainingConfig& config);

struct HeldOutReport {
  double rmse = 0.0;            // against the generator's M
  double max_abs_error = 0.0;   // worst single parameter
  std::array<double, 6> per_parameter_max{};
};

// Evaluates predict_params on `count` fresh samples drawn from `seed`.
HeldOutReport evaluate_held_out(const RegressorModel& model, std::size_t count, std::uint64_t seed,
                                PointLayout layout = PointLayout::uniform);

}  // namespace zsreg
