#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

namespace zsreg {

inline constexpr int kSubsetSize = 64;
inline constexpr int kInputWidth = 4 * kSubsetSize;  // 64 fixed (x, y) then 64 moving (x, y)
inline constexpr int kOutputWidth = 6;
// fx, fy, mx, my, then the cross products fx*mx, fx*my, fy*mx, fy*my.
inline constexpr int kPointWidth = 8;

template <typename Scalar>
struct DenseLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weights;  // outputs x inputs
  Vector biases;

  int inputs() const { return static_cast<int>(weights.cols()); }
  int outputs() const { return static_cast<int>(weights.rows()); }
};

// Multilayer perceptron regressing the 6 affine parameters from 64
// correspondences. Two layouts share one representation:
//   dense:   256-wide input -> head layers -> 6
//   pooled:  each correspondence (fx, fy, mx, my and their cross products)
//            -> shared encoder layers,
//            mean over the 64 correspondences, then head layers -> 6
// Every hidden layer is followed by a rectifier; the final layer is linear.
template <typename Scalar>
class BasicRegressor {
 public:
  using Layer = DenseLayer<Scalar>;
  using Matrix = typename Layer::Matrix;

  std::vector<Layer> encoder;  // empty for the dense layout
  std::vector<Layer> head;

  bool pooled() const { return !encoder.empty(); }
  std::size_t parameter_count() const;

  // Throws ShapeError when layer widths do not chain or the ends are wrong.
  void validate() const;

  // inputs: kInputWidth x batch, outputs: kOutputWidth x batch.
  Matrix forward(const Matrix& inputs) const;

  template <typename Other>
  BasicRegressor<Other> cast() const;
};

// Gradient storage, same shapes as the model it belongs to.
template <typename Scalar>
using RegressorGradient = BasicRegressor<Scalar>;

// Mean squared error over all batch entries and outputs, with its gradient
// with respect to every parameter when `gradient` is non-null.
template <typename Scalar>
Scalar regressor_loss(const BasicRegressor<Scalar>& model,
                      const typename BasicRegressor<Scalar>::Matrix& inputs,
                      const typename BasicRegressor<Scalar>::Matrix& targets,
                      RegressorGradient<Scalar>* gradient);

using RegressorModel = BasicRegressor<float>;

// He-initialized models with zero biases.
RegressorModel make_dense_regressor(std::span<const int> hidden, std::mt19937_64& rng);
RegressorModel make_pooled_regressor(std::span<const int> encoder_widths,
                                     std::span<const int> head_widths, std::mt19937_64& rng);

// ".zrm": "ZRM1", u32 layer count, per layer u32 rows, u32 cols, rows*cols f32
// weights (row-major) then rows f32 biases, trailing CRC32. A 0x0 layer marks
// the mean-pooling step between encoder and head.
RegressorModel load_regressor(const std::filesystem::path& path);
void save_regressor(const RegressorModel& model, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_regressor(const RegressorModel& model);

extern template class BasicRegressor<float>;
extern template class BasicRegressor<double>;
extern template float regressor_loss<float>(const BasicRegressor<float>&,
                                            const BasicRegressor<float>::Matrix&,
                                            const BasicRegressor<float>::Matrix&,
                                            RegressorGradient<float>*);
extern template double regressor_loss<double>(const BasicRegressor<double>&,
                                              const BasicRegressor<double>::Matrix&,
                                              const BasicRegressor<double>::Matrix&,
                                              RegressorGradient<double>*);

template <typename Scalar>
template <typename Other>
BasicRegressor<Other> BasicRegressor<Scalar>::cast() const {
  BasicRegressor<Other> out;
  auto convert = [](const std::vector<Layer>& from, std::vector<DenseLayer<Other>>& to) {
    for (const auto& l : from) to.push_back({l.weights.template cast<Other>(), l.biases.template cast<Other>()});
  };
  convert(encoder, out.encoder);
  convert(head, out.head);
  return out;
}

}  // namespace zsreg
