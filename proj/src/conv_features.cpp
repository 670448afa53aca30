#include "zsreg/conv_features.hpp"

#include "zsreg/binary_io.hpp"
#include "zsreg/error.hpp"
#include "zsreg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace zsreg {
namespace {

constexpr char kBankMagic[] = "ZRW1";

void check_layer(const ConvLayer& layer, const std::string& name) {
  if (layer.kernel_h != 3 || layer.kernel_w != 3) {
    throw ShapeError(name + ": kernel must be 3x3, got " + std::to_string(layer.kernel_h) + "x" +
                     std::to_string(layer.kernel_w));
  }
  if (layer.out_channels != kFiltersPerLayer) {
    throw ShapeError(name + ": expected " + std::to_string(kFiltersPerLayer) + " filters, got " +
                     std::to_string(layer.out_channels));
  }
  const std::size_t expected =
      static_cast<std::size_t>(layer.out_channels) * layer.in_channels * layer.kernel_h * layer.kernel_w;
  if (layer.weights.size() != expected || layer.biases.size() != static_cast<std::size_t>(layer.out_channels)) {
    throw ShapeError(name + ": weight or bias count does not match the declared shape");
  }
  auto finite = [](float v) { return std::isfinite(v); };
  if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
      !std::all_of(layer.biases.begin(), layer.biases.end(), finite)) {
    throw FormatError(name + ": non-finite weight");
  }
}

// acc += w * shift(src, dc, dr), zero outside src.
void accumulate_tap(std::span<float> acc, const Raster& src, float w, int dc, int dr) {
  const int width = src.width();
  const int height = src.height();
  const int c_begin = std::max(0, -dc);
  const int c_end = std::min(width, width - dc);
  const int r_begin = std::max(0, -dr);
  const int r_end = std::min(height, height - dr);
  const auto in = src.samples();
  for (int r = r_begin; r < r_end; ++r) {
    float* out_row = acc.data() + static_cast<std::size_t>(r) * width;
    const float* in_row = in.data() + static_cast<std::size_t>(r + dr) * width + dc;
    for (int c = c_begin; c < c_end; ++c) out_row[c] += w * in_row[c];
  }
}

}  // namespace

ConvLayer::ConvLayer(int out, int in, int kh, int kw)
    : out_channels(out),
      in_channels(in),
      kernel_h(kh),
      kernel_w(kw),
      weights(static_cast<std::size_t>(out) * in * kh * kw, 0.0f),
      biases(static_cast<std::size_t>(out), 0.0f) {}

void FilterBank::validate() const {
  check_layer(layer1, "layer 1");
  check_layer(layer2, "layer 2");
  if (layer1.in_channels != 1 && layer1.in_channels != 3) {
    throw ShapeError("layer 1: input channels must be 1 or 3, got " +
                     std::to_string(layer1.in_channels));
  }
  if (layer2.in_channels != layer1.out_channels) {
    throw ShapeError("layer 2: expects " + std::to_string(layer2.in_channels) +
                     " input channels but layer 1 produces " + std::to_string(layer1.out_channels));
  }
}

FilterBank load_filter_bank(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string what = path.string();
  ByteReader reader(bytes, what);
  reader.expect_magic(kBankMagic);
  const std::uint32_t layers = reader.u32();
  if (layers != 2) {
    throw ShapeError(what + ": expected 2 layers, found " + std::to_string(layers));
  }
  ConvLayer parsed[2];
  for (auto& layer : parsed) {
    const std::uint32_t out = reader.u32();
    const std::uint32_t in = reader.u32();
    const std::uint32_t kh = reader.u32();
    const std::uint32_t kw = reader.u32();
    const std::uint64_t count = static_cast<std::uint64_t>(out) * in * kh * kw;
    if (count > reader.remaining() / 4) throw FormatError(what + ": truncated weights");
    layer.out_channels = static_cast<int>(out);
    layer.in_channels = static_cast<int>(in);
    layer.kernel_h = static_cast<int>(kh);
    layer.kernel_w = static_cast<int>(kw);
    layer.weights = reader.f32s(count);
    layer.biases = reader.f32s(out);
  }
  reader.verify_seal();
  FilterBank bank{std::move(parsed[0]), std::move(parsed[1])};
  bank.validate();
  return bank;
}

void save_filter_bank(const FilterBank& bank, const std::filesystem::path& path) {
  bank.validate();
  ByteWriter w;
  w.magic(kBankMagic);
  w.u32(2);
  for (const ConvLayer* layer : {&bank.layer1, &bank.layer2}) {
    w.u32(static_cast<std::uint32_t>(layer->out_channels));
    w.u32(static_cast<std::uint32_t>(layer->in_channels));
    w.u32(static_cast<std::uint32_t>(layer->kernel_h));
    w.u32(static_cast<std::uint32_t>(layer->kernel_w));
    w.f32s(layer->weights);
    w.f32s(layer->biases);
  }
  w.seal();
  write_file(path, w.bytes());
}

std::vector<Raster> apply_layer(const std::vector<Raster>& inputs, const ConvLayer& layer) {
  if (inputs.empty() || static_cast<int>(inputs.size()) != layer.in_channels) {
    throw ShapeError("layer expects " + std::to_string(layer.in_channels) + " input maps, got " +
                     std::to_string(inputs.size()));
  }
  const int width = inputs.front().width();
  const int height = inputs.front().height();
  const int half_h = layer.kernel_h / 2;
  const int half_w = layer.kernel_w / 2;
  std::vector<Raster> outputs(static_cast<std::size_t>(layer.out_channels));
  parallel_for(outputs.size(), [&](std::size_t o) {
    Raster acc(width, height, layer.biases[o]);
    auto a = acc.samples();
    for (int i = 0; i < layer.in_channels; ++i) {
      for (int r = 0; r < layer.kernel_h; ++r) {
        for (int c = 0; c < layer.kernel_w; ++c) {
          const float w = layer.weight(static_cast<int>(o), i, r, c);
          // Structured banks are sparse; skipping zero taps is exact.
          if (w != 0.0f) accumulate_tap(a, inputs[static_cast<std::size_t>(i)], w, c - half_w, r - half_h);
        }
      }
    }
    for (float& v : a) v = v > 0.0f ? v : 0.0f;
    outputs[o] = std::move(acc);
  });
  return outputs;
}

FeatureStack extract_features(const Raster& img, const FilterBank& bank) {
  // Replicating a gray image over C channels equals one channel convolved
  // with the channel-summed kernel.
  ConvLayer first(bank.layer1.out_channels, 1, bank.layer1.kernel_h, bank.layer1.kernel_w);
  first.biases = bank.layer1.biases;
  for (int o = 0; o < first.out_channels; ++o) {
    for (int r = 0; r < first.kernel_h; ++r) {
      for (int c = 0; c < first.kernel_w; ++c) {
        float sum = 0.0f;
        for (int i = 0; i < bank.layer1.in_channels; ++i) sum += bank.layer1.weight(o, i, r, c);
        first.weight(o, 0, r, c) = sum;
      }
    }
  }
  FeatureStack stack;
  stack.maps = apply_layer({img}, first);
  auto second = apply_layer(stack.maps, bank.layer2);
  stack.maps.insert(stack.maps.end(), std::make_move_iterator(second.begin()),
                    std::make_move_iterator(second.end()));
  return stack;
}

Raster threshold_map(const Raster& map, double fraction) {
  const auto s = map.samples();
  const float peak = *std::max_element(s.begin(), s.end());
  if (peak <= 0.0f) return map;
  const double cut = fraction * static_cast<double>(peak);
  Raster out = map;
  for (float& v : out.samples()) {
    if (static_cast<double>(v) <= cut) v = 0.0f;
  }
  return out;
}

}  // namespace zsreg
