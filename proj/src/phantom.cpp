#include "zsreg/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace zsreg {

Raster gaussian_blur(const Raster& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    norm += kernel[i + radius];
  }
  for (double& k : kernel) k /= norm;

  const int w = img.width();
  const int h = img.height();
  Raster tmp(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int cc = c + k;
        if (cc >= 0 && cc < w) acc += kernel[k + radius] * img(cc, r);
      }
      tmp(c, r) = static_cast<float>(acc);
    }
  }
  Raster out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int rr = r + k;
        if (rr >= 0 && rr < h) acc += kernel[k + radius] * tmp(c, rr);
      }
      out(c, r) = static_cast<float>(acc);
    }
  }
  return out;
}

Raster make_phantom(std::uint64_t seed, const PhantomOptions& options) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  const int w = options.width;
  const int h = options.height;
  const double half = 0.5 * std::min(w, h);
  const double cx = 0.5 * (w - 1) + uniform(-0.03, 0.03) * w;
  const double cy = 0.5 * (h - 1) + uniform(-0.03, 0.03) * h;
  const double semi_x = options.head_fraction * half * uniform(0.9, 1.0);
  const double semi_y = semi_x * uniform(1.1, 1.25);
  const double tilt = uniform(-0.15, 0.15);
  const double ct = std::cos(tilt);
  const double st = std::sin(tilt);

  // Normalized elliptical radius of a pixel.
  auto rho = [&](double c, double r) {
    const double dx = c - cx;
    const double dy = r - cy;
    const double u = (ct * dx + st * dy) / semi_x;
    const double v = (-st * dx + ct * dy) / semi_y;
    return std::sqrt(u * u + v * v);
  };

  struct Blob {
    double x, y, rx, ry, angle, value;
  };
  // Distinct blob intensities so each one is separable from its neighbors.
  std::array<double, 9> levels{0.05, 0.18, 0.28, 0.66, 0.74, 0.82, 0.9, 0.97, 1.0};
  std::shuffle(levels.begin(), levels.end(), rng);
  std::vector<Blob> blobs;
  const int blob_count = std::clamp(options.blobs, 0, static_cast<int>(levels.size()));
  for (int b = 0; b < blob_count; ++b) {
    const double angle = uniform(0.0, 2.0 * std::acos(-1.0));
    const double dist = uniform(0.1, 0.62);
    const double radius = uniform(0.05, 0.11) * semi_x + 2.0;
    blobs.push_back({cx + dist * semi_x * std::cos(angle), cy + dist * semi_y * std::sin(angle), radius,
                     radius * uniform(0.7, 1.3), uniform(0.0, 3.14), levels[b]});
  }

  Raster img(w, h, 0.0f);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double p = rho(c, r);
      double value = 0.0;
      if (p < 1.0) value = 0.85;         // scalp
      if (p < 0.92) value = 0.12;        // skull / CSF gap
      if (p < 0.86) value = 0.42;        // grey matter
      if (p < 0.55) value = 0.52;        // white-matter core
      if (p < 0.86) {
        for (const Blob& blob : blobs) {
          const double dx = c - blob.x;
          const double dy = r - blob.y;
          const double ca = std::cos(blob.angle);
          const double sa = std::sin(blob.angle);
          const double u = (ca * dx + sa * dy) / blob.rx;
          const double v = (-sa * dx + ca * dy) / blob.ry;
          if (u * u + v * v < 1.0) value = blob.value;
        }
      }
      img(c, r) = static_cast<float>(value);
    }
  }
  img = gaussian_blur(img, options.blur_sigma);

  std::normal_distribution<double> noise(0.0, options.noise_sigma);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      float& v = img(c, r);
      if (rho(c, r) < 1.0 && options.noise_sigma > 0.0) v = static_cast<float>(v + noise(rng));
      v = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return img;
}

}  // namespace zsreg
