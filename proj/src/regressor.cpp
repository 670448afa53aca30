#include "zsreg/regressor.hpp"

#include "zsreg/binary_io.hpp"
#include "zsreg/error.hpp"

#include <cmath>
#include <string>

namespace zsreg {
namespace {

constexpr char kModelMagic[] = "ZRM1";

template <typename Matrix>
Matrix gather_points(const Matrix& inputs) {
  const Eigen::Index batch = inputs.cols();
  Matrix points(kPointWidth, batch * kSubsetSize);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int i = 0; i < kSubsetSize; ++i) {
      const Eigen::Index col = b * kSubsetSize + i;
      const auto fx = inputs(2 * i, b);
      const auto fy = inputs(2 * i + 1, b);
      const auto mx = inputs(2 * kSubsetSize + 2 * i, b);
      const auto my = inputs(2 * kSubsetSize + 2 * i + 1, b);
      points(0, col) = fx;
      points(1, col) = fy;
      points(2, col) = mx;
      points(3, col) = my;
      points(4, col) = fx * mx;
      points(5, col) = fx * my;
      points(6, col) = fy * mx;
      points(7, col) = fy * my;
    }
  }
  return points;
}

template <typename Matrix>
Matrix mean_pool(const Matrix& per_point, Eigen::Index batch) {
  Matrix pooled(per_point.rows(), batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    pooled.col(b) = per_point.middleCols(b * kSubsetSize, kSubsetSize).rowwise().mean();
  }
  return pooled;
}

template <typename Layer, typename Matrix>
Matrix affine(const Layer& layer, const Matrix& x) {
  Matrix z = layer.weights * x;
  z.colwise() += layer.biases;
  return z;
}

template <typename Matrix>
void relu_inplace(Matrix& m) {
  m = m.cwiseMax(typename Matrix::Scalar(0));
}

template <typename Layers>
void check_chain_any(const Layers& layers, int expected_in, const std::string& what) {
  int width = expected_in;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].inputs() != width || layers[l].biases.size() != layers[l].outputs()) {
      throw ShapeError(what + " layer " + std::to_string(l) + " expects " +
                       std::to_string(layers[l].inputs()) + " inputs, previous width is " +
                       std::to_string(width));
    }
    width = layers[l].outputs();
  }
}

DenseLayer<float> he_layer(int in, int out, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / in));
  DenseLayer<float> layer{Eigen::MatrixXf(out, in), Eigen::VectorXf::Zero(out)};
  for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      layer.weights(r, c) = static_cast<float>(normal(rng));
    }
  }
  return layer;
}

}  // namespace

template <typename Scalar>
std::size_t BasicRegressor<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* group : {&encoder, &head}) {
    for (const auto& l : *group) n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  }
  return n;
}

template <typename Scalar>
void BasicRegressor<Scalar>::validate() const {
  if (head.empty()) throw ShapeError("regressor has no head layers");
  int width = kInputWidth;
  if (pooled()) {
    check_chain_any(encoder, kPointWidth, "encoder");
    width = encoder.back().outputs();
  }
  check_chain_any(head, width, "head");
  if (head.back().outputs() != kOutputWidth) {
    throw ShapeError("regressor must emit " + std::to_string(kOutputWidth) + " values, emits " +
                     std::to_string(head.back().outputs()));
  }
  for (const auto* group : {&encoder, &head}) {
    for (const auto& l : *group) {
      if (!l.weights.allFinite() || !l.biases.allFinite()) {
        throw FormatError("regressor holds non-finite parameters");
      }
    }
  }
}

template <typename Scalar>
typename BasicRegressor<Scalar>::Matrix BasicRegressor<Scalar>::forward(const Matrix& inputs) const {
  Matrix x;
  if (pooled()) {
    Matrix h = gather_points(inputs);
    for (const auto& layer : encoder) {
      h = affine(layer, h);
      relu_inplace(h);
    }
    x = mean_pool(h, inputs.cols());
  } else {
    x = inputs;
  }
  for (std::size_t l = 0; l < head.size(); ++l) {
    x = affine(head[l], x);
    if (l + 1 < head.size()) relu_inplace(x);
  }
  return x;
}

template <typename Scalar>
Scalar regressor_loss(const BasicRegressor<Scalar>& model,
                      const typename BasicRegressor<Scalar>::Matrix& inputs,
                      const typename BasicRegressor<Scalar>::Matrix& targets,
                      RegressorGradient<Scalar>* gradient) {
  using Matrix = typename BasicRegressor<Scalar>::Matrix;
  const Eigen::Index batch = inputs.cols();

  // Forward pass keeping each layer's post-activation output.
  std::vector<Matrix> enc_acts;
  Matrix points;
  if (model.pooled()) {
    points = gather_points(inputs);
    const Matrix* prev = &points;
    for (const auto& layer : model.encoder) {
      Matrix h = affine(layer, *prev);
      relu_inplace(h);
      enc_acts.push_back(std::move(h));
      prev = &enc_acts.back();
    }
  }
  std::vector<Matrix> head_acts;
  head_acts.push_back(model.pooled() ? mean_pool(enc_acts.back(), batch) : inputs);
  for (std::size_t l = 0; l < model.head.size(); ++l) {
    Matrix z = affine(model.head[l], head_acts.back());
    if (l + 1 < model.head.size()) relu_inplace(z);
    head_acts.push_back(std::move(z));
  }
  const Matrix diff = head_acts.back() - targets;
  const Scalar count = static_cast<Scalar>(diff.size());
  const Scalar loss = diff.squaredNorm() / count;
  if (gradient == nullptr) return loss;

  gradient->encoder.resize(model.encoder.size());
  gradient->head.resize(model.head.size());

  Matrix delta = diff * (Scalar(2) / count);
  for (std::size_t l = model.head.size(); l-- > 0;) {
    const Matrix& input = head_acts[l];
    gradient->head[l].weights = delta * input.transpose();
    gradient->head[l].biases = delta.rowwise().sum();
    if (l == 0 && !model.pooled()) break;
    delta = model.head[l].weights.transpose() * delta;
    if (l > 0) delta = delta.cwiseProduct((input.array() > Scalar(0)).matrix().template cast<Scalar>());
  }
  if (!model.pooled()) return loss;

  // Un-pool: each of the 64 per-point rows receives delta / 64.
  Matrix point_delta(delta.rows(), batch * kSubsetSize);
  for (Eigen::Index b = 0; b < batch; ++b) {
    point_delta.middleCols(b * kSubsetSize, kSubsetSize).colwise() = delta.col(b) / Scalar(kSubsetSize);
  }
  for (std::size_t l = model.encoder.size(); l-- > 0;) {
    point_delta = point_delta.cwiseProduct((enc_acts[l].array() > Scalar(0)).matrix().template cast<Scalar>());
    const Matrix& input = l == 0 ? points : enc_acts[l - 1];
    gradient->encoder[l].weights = point_delta * input.transpose();
    gradient->encoder[l].biases = point_delta.rowwise().sum();
    if (l > 0) point_delta = model.encoder[l].weights.transpose() * point_delta;
  }
  return loss;
}

template class BasicRegressor<float>;
template class BasicRegressor<double>;
template float regressor_loss<float>(const BasicRegressor<float>&, const BasicRegressor<float>::Matrix&,
                                     const BasicRegressor<float>::Matrix&, RegressorGradient<float>*);
template double regressor_loss<double>(const BasicRegressor<double>&, const BasicRegressor<double>::Matrix&,
                                       const BasicRegressor<double>::Matrix&, RegressorGradient<double>*);

RegressorModel make_dense_regressor(std::span<const int> hidden, std::mt19937_64& rng) {
  RegressorModel model;
  int width = kInputWidth;
  for (int h : hidden) {
    model.head.push_back(he_layer(width, h, rng));
    width = h;
  }
  model.head.push_back(he_layer(width, kOutputWidth, rng));
  return model;
}

RegressorModel make_pooled_regressor(std::span<const int> encoder_widths,
                                     std::span<const int> head_widths, std::mt19937_64& rng) {
  if (encoder_widths.empty()) throw ShapeError("pooled regressor needs at least one encoder layer");
  RegressorModel model;
  int width = kPointWidth;
  for (int h : encoder_widths) {
    model.encoder.push_back(he_layer(width, h, rng));
    width = h;
  }
  for (int h : head_widths) {
    model.head.push_back(he_layer(width, h, rng));
    width = h;
  }
  model.head.push_back(he_layer(width, kOutputWidth, rng));
  return model;
}

std::vector<std::uint8_t> encode_regressor(const RegressorModel& model) {
  model.validate();
  ByteWriter w;
  w.magic(kModelMagic);
  const std::size_t count = model.encoder.size() + model.head.size() + (model.pooled() ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(count));
  auto put = [&w](const DenseLayer<float>& layer) {
    w.u32(static_cast<std::uint32_t>(layer.weights.rows()));
    w.u32(static_cast<std::uint32_t>(layer.weights.cols()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.f32(layer.weights(r, c));
    }
    for (Eigen::Index r = 0; r < layer.biases.size(); ++r) w.f32(layer.biases(r));
  };
  for (const auto& layer : model.encoder) put(layer);
  if (model.pooled()) {
    w.u32(0);
    w.u32(0);
  }
  for (const auto& layer : model.head) put(layer);
  w.seal();
  return w.bytes();
}

void save_regressor(const RegressorModel& model, const std::filesystem::path& path) {
  write_file(path, encode_regressor(model));
}

RegressorModel load_regressor(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string what = path.string();
  ByteReader reader(bytes, what);
  reader.expect_magic(kModelMagic);
  const std::uint32_t count = reader.u32();
  std::vector<DenseLayer<float>> layers;
  int pool_at = -1;
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::uint32_t rows = reader.u32();
    const std::uint32_t cols = reader.u32();
    if (rows == 0 && cols == 0) {
      if (pool_at >= 0) throw FormatError(what + ": more than one pooling marker");
      pool_at = static_cast<int>(layers.size());
      continue;
    }
    const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
    if (rows == 0 || cols == 0 || n + rows > reader.remaining() / 4) {
      throw FormatError(what + ": truncated or empty layer " + std::to_string(l));
    }
    DenseLayer<float> layer{Eigen::MatrixXf(rows, cols), Eigen::VectorXf(rows)};
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) layer.weights(r, c) = reader.f32();
    }
    for (std::uint32_t r = 0; r < rows; ++r) layer.biases(r) = reader.f32();
    layers.push_back(std::move(layer));
  }
  reader.verify_seal();
  RegressorModel model;
  const auto split = layers.begin() + (pool_at < 0 ? 0 : pool_at);
  model.encoder.assign(layers.begin(), split);
  model.head.assign(split, layers.end());
  if (pool_at == 0) throw ShapeError(what + ": pooling marker before any encoder layer");
  model.validate();
  return model;
}

}  // namespace zsreg
