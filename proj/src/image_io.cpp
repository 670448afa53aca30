#include "zsreg/image_io.hpp"

#include "zsreg/binary_io.hpp"
#include "zsreg/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <memory>

namespace zsreg {
namespace {

constexpr char kF32rMagic[] = "F32R";

struct PngMemorySource {
  const std::uint8_t* data = nullptr;
  std::size_t size = 0;
  std::size_t offset = 0;
};

struct PngDecodeState {
  std::string error;
  std::vector<std::uint8_t> pixels;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;
  int bit_depth = 0;
  bool has_alpha = false;
};

void png_read_callback(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<PngMemorySource*>(png_get_io_ptr(png));
  if (src->offset + count > src->size) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, src->data + src->offset, count);
  src->offset += count;
}

void png_error_callback(png_structp png, png_const_charp message) {
  auto* state = static_cast<PngDecodeState*>(png_get_error_ptr(png));
  state->error = message;
  png_longjmp(png, 1);
}

void png_warning_callback(png_structp, png_const_charp) {}

// libpng reports errors through longjmp, so every object whose lifetime spans
// the decode lives in `state`, which is owned by the caller.
bool decode_png(PngMemorySource* src, PngDecodeState* state) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, state, png_error_callback,
                                           png_warning_callback);
  if (png == nullptr) {
    state->error = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    state->error = "png_create_info_struct failed";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, src, png_read_callback);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  state->width = png_get_image_width(png, info);
  state->height = png_get_image_height(png, info);
  state->channels = png_get_channels(png, info);
  state->bit_depth = png_get_bit_depth(png, info);
  const int final_color = png_get_color_type(png, info);
  state->has_alpha = (final_color & PNG_COLOR_MASK_ALPHA) != 0;
  if (state->bit_depth != 8 && state->bit_depth != 16) {
    state->error = "unsupported PNG bit depth " + std::to_string(state->bit_depth);
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  state->pixels.resize(row_bytes * state->height);
  for (png_uint_32 row = 0; row < state->height; ++row) {
    png_read_row(png, state->pixels.data() + row * row_bytes, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool is_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

bool is_f32r(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), kF32rMagic, 4) == 0;
}

Raster decode_f32r(std::span<const std::uint8_t> bytes, const std::string& what) {
  ByteReader reader(bytes, what);
  reader.expect_magic(kF32rMagic);
  const std::uint32_t width = reader.u32();
  const std::uint32_t height = reader.u32();
  if (width == 0 || height == 0) throw FormatError(what + ": zero dimension in header");
  const std::uint64_t count = static_cast<std::uint64_t>(width) * height;
  if (reader.remaining() != count * 4) {
    throw FormatError(what + ": header declares " + std::to_string(count) + " samples, payload holds " +
                      std::to_string(reader.remaining() / 4.0));
  }
  Raster img(static_cast<int>(width), static_cast<int>(height), reader.f32s(count));
  if (!img.all_finite()) throw FormatError(what + ": non-finite sample");
  return img;
}

Raster decode_png_bytes(std::span<const std::uint8_t> bytes, const std::string& what) {
  PngMemorySource src{bytes.data(), bytes.size(), 0};
  auto state = std::make_unique<PngDecodeState>();
  if (!decode_png(&src, state.get())) throw FormatError(what + ": " + state->error);

  const int channels = state->channels;
  const int color_channels = state->has_alpha ? channels - 1 : channels;
  const bool wide = state->bit_depth == 16;
  const double scale = wide ? 65535.0 : 255.0;
  Raster img(static_cast<int>(state->width), static_cast<int>(state->height));
  auto out = img.samples();
  const std::uint8_t* p = state->pixels.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sum = 0.0;
    for (int c = 0; c < channels; ++c) {
      double v;
      if (wide) {
        v = static_cast<double>((p[0] << 8) | p[1]);  // PNG stores 16-bit big-endian
        p += 2;
      } else {
        v = *p++;
      }
      if (c < color_channels) sum += v;
    }
    out[i] = static_cast<float>(sum / color_channels / scale);
  }
  return img;
}

void png_write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_callback(png_structp) {}

struct PngEncodeState {
  std::string error;
  std::vector<std::uint8_t> encoded;
};

void png_encode_error(png_structp png, png_const_charp message) {
  auto* state = static_cast<PngEncodeState*>(png_get_error_ptr(png));
  state->error = message;
  png_longjmp(png, 1);
}

bool encode_png(const std::vector<std::uint8_t>* rows, int width, int height, int bit_depth,
                PngEncodeState* state) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, state, png_encode_error,
                                            png_warning_callback);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &state->encoded, png_write_callback, png_flush_callback);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * (bit_depth / 8);
  for (int row = 0; row < height; ++row) {
    png_write_row(png, rows->data() + row * row_bytes);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

Raster load_raster(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (is_f32r(bytes)) return decode_f32r(bytes, path.string());
  if (is_png(bytes)) return decode_png_bytes(bytes, path.string());
  throw FormatError(path.string() + ": neither PNG nor F32R content");
}

Raster load_f32r(const std::filesystem::path& path) {
  return decode_f32r(read_file(path), path.string());
}

void save_f32r(const Raster& img, const std::filesystem::path& path) {
  ByteWriter w;
  w.magic(kF32rMagic);
  w.u32(static_cast<std::uint32_t>(img.width()));
  w.u32(static_cast<std::uint32_t>(img.height()));
  w.f32s(img.samples());
  write_file(path, w.bytes());
}

Raster load_png(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (!is_png(bytes)) throw FormatError(path.string() + ": missing PNG signature");
  return decode_png_bytes(bytes, path.string());
}

void save_png(const Raster& img, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw FormatError("PNG output supports 8 or 16 bits, got " + std::to_string(bit_depth));
  }
  const double levels = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<std::uint8_t> rows;
  rows.reserve(img.size() * (bit_depth / 8));
  for (float v : img.samples()) {
    const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
    const auto q = static_cast<std::uint32_t>(std::lround(clamped * levels));
    if (bit_depth == 16) rows.push_back(static_cast<std::uint8_t>(q >> 8));
    rows.push_back(static_cast<std::uint8_t>(q & 0xFF));
  }
  auto state = std::make_unique<PngEncodeState>();
  if (!encode_png(&rows, img.width(), img.height(), bit_depth, state.get())) {
    throw IoError(path.string() + ": PNG encoding failed: " + state->error);
  }
  write_file(path, state->encoded);
}

}  // namespace zsreg
