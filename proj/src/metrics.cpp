#include "zsreg/metrics.hpp"

#include "zsreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace zsreg {
namespace {

void require_same_shape(const Raster& a, const Raster& b, const char* metric) {
  if (!a.same_shape(b)) {
    throw DimensionMismatch(std::string(metric) + ": image sizes differ (" + std::to_string(a.width()) + "x" +
                            std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                            std::to_string(b.height()) + ")");
  }
}

// Summed-area table with a zero first row and column.
std::vector<double> integral(const Raster& img, auto&& value) {
  const int w = img.width();
  const int h = img.height();
  std::vector<double> table(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  for (int r = 0; r < h; ++r) {
    double row_sum = 0.0;
    for (int c = 0; c < w; ++c) {
      row_sum += value(c, r);
      table[static_cast<std::size_t>(r + 1) * (w + 1) + (c + 1)] =
          table[static_cast<std::size_t>(r) * (w + 1) + (c + 1)] + row_sum;
    }
  }
  return table;
}

double box_sum(const std::vector<double>& table, int w, int c0, int r0, int size) {
  const auto at = [&](int c, int r) { return table[static_cast<std::size_t>(r) * (w + 1) + c]; };
  return at(c0 + size, r0 + size) - at(c0, r0 + size) - at(c0 + size, r0) + at(c0, r0);
}

}  // namespace

double dice(const Raster& fixed, const Raster& moving, double fg_threshold) {
  require_same_shape(fixed, moving, "dice");
  const auto a = fixed.samples();
  const auto b = moving.samples();
  std::size_t na = 0;
  std::size_t nb = 0;
  std::size_t both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool fa = a[i] > fg_threshold;
    const bool fb = b[i] > fg_threshold;
    na += fa;
    nb += fb;
    both += fa && fb;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double ssim_raw(const Raster& fixed, const Raster& moving) {
  require_same_shape(fixed, moving, "ssim");
  if (fixed.width() < kSsimWindow || fixed.height() < kSsimWindow) {
    throw DimensionMismatch("ssim: image smaller than the " + std::to_string(kSsimWindow) + "x" +
                            std::to_string(kSsimWindow) + " window");
  }
  const Raster f = rescale_unit(fixed);
  const Raster m = rescale_unit(moving);
  const int w = f.width();
  const auto sf = integral(f, [&](int c, int r) { return static_cast<double>(f(c, r)); });
  const auto sm = integral(m, [&](int c, int r) { return static_cast<double>(m(c, r)); });
  const auto sff = integral(f, [&](int c, int r) { return static_cast<double>(f(c, r)) * f(c, r); });
  const auto smm = integral(m, [&](int c, int r) { return static_cast<double>(m(c, r)) * m(c, r); });
  const auto sfm = integral(f, [&](int c, int r) { return static_cast<double>(f(c, r)) * m(c, r); });

  constexpr double kRange = 1.0;
  constexpr double c1 = (0.01 * kRange) * (0.01 * kRange);
  constexpr double c2 = (0.03 * kRange) * (0.03 * kRange);
  constexpr double n = kSsimWindow * kSsimWindow;

  double total = 0.0;
  std::size_t windows = 0;
  for (int r = 0; r + kSsimWindow <= f.height(); ++r) {
    for (int c = 0; c + kSsimWindow <= w; ++c) {
      const double mu_f = box_sum(sf, w, c, r, kSsimWindow) / n;
      const double mu_m = box_sum(sm, w, c, r, kSsimWindow) / n;
      // Unbiased local (co)variances, clamped against cancellation.
      const double var_f = std::max(0.0, (box_sum(sff, w, c, r, kSsimWindow) - n * mu_f * mu_f) / (n - 1));
      const double var_m = std::max(0.0, (box_sum(smm, w, c, r, kSsimWindow) - n * mu_m * mu_m) / (n - 1));
      const double cov = (box_sum(sfm, w, c, r, kSsimWindow) - n * mu_f * mu_m) / (n - 1);
      total += ((2.0 * mu_f * mu_m + c1) * (2.0 * cov + c2)) /
               ((mu_f * mu_f + mu_m * mu_m + c1) * (var_f + var_m + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

double ssim(const Raster& fixed, const Raster& moving) {
  return std::clamp(ssim_raw(fixed, moving), 0.0, 1.0);
}

double mutual_information(const Raster& fixed, const Raster& moving, int bins) {
  require_same_shape(fixed, moving, "mutual_information");
  if (bins < 2) throw Error("mutual_information: need at least 2 bins");
  const Raster f = rescale_unit(fixed);
  const Raster m = rescale_unit(moving);
  const auto bin_of = [bins](float v) { return std::min(bins - 1, static_cast<int>(v * bins)); };
  std::vector<double> joint(static_cast<std::size_t>(bins) * bins, 0.0);
  const auto a = f.samples();
  const auto b = m.samples();
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[static_cast<std::size_t>(bin_of(a[i])) * bins + bin_of(b[i])] += 1.0;
  }
  const double n = static_cast<double>(a.size());
  std::vector<double> pf(bins, 0.0);
  std::vector<double> pm(bins, 0.0);
  for (int i = 0; i < bins; ++i) {
    for (int j = 0; j < bins; ++j) {
      const double p = joint[static_cast<std::size_t>(i) * bins + j] / n;
      pf[i] += p;
      pm[j] += p;
    }
  }
  const auto term = [&](int i, int j) {
    const double p = joint[static_cast<std::size_t>(i) * bins + j] / n;
    return p > 0.0 ? p * std::log2(p / (pf[i] * pm[j])) : 0.0;
  };
  // Cells (i, j) and (j, i) are summed together so swapping the arguments
  // reproduces the same floating-point result.
  double mi = 0.0;
  for (int i = 0; i < bins; ++i) {
    mi += term(i, i);
    for (int j = i + 1; j < bins; ++j) mi += term(i, j) + term(j, i);
  }
  return std::max(0.0, mi);
}

double mse(const Raster& fixed, const Raster& moving) {
  require_same_shape(fixed, moving, "mse");
  const auto a = fixed.samples();
  const auto b = moving.samples();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

MetricReport compute_metrics(const Raster& fixed, const Raster& moving, double fg_threshold) {
  return {dice(fixed, moving, fg_threshold), ssim(fixed, moving), mutual_information(fixed, moving),
          mse(fixed, moving)};
}

}  // namespace zsreg
