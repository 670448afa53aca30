// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//   zsreg_acceptance [model.zrm] [data-dir]

#include "zsreg/conv_features.hpp"
#include "zsreg/image_io.hpp"
#include "zsreg/metrics.hpp"
#include "zsreg/parallel.hpp"
#include "zsreg/phantom.hpp"
#include "zsreg/registration.hpp"
#include "zsreg/regressor.hpp"
#include "zsreg/training.hpp"
#include "zsreg/uncertainty.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace zsreg;

namespace {

int failures = 0;

void report(bool pass, const char* name, const std::string& detail) {
  std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CorrespondenceList noiseless_set(std::mt19937_64& rng, AffineParams& m) {
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : m.values) v = coeff(rng);
  CorrespondenceList corr;
  for (int i = 0; i < kSubsetSize; ++i) {
    const Eigen::Vector2d x(unit(rng), unit(rng));
    corr.push_back({x, m.apply(x), i});
  }
  return corr;
}

void oracle_equivalence(const RegressorModel& model) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  double vs_m = 0.0, vs_ls = 0.0, ls_vs_m = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    AffineParams m;
    const CorrespondenceList corr = noiseless_set(rng, m);
    const AffineParams ls = least_squares_fit(corr);
    const AffineParams pred = predict_params(model, corr);
    vs_m = std::max(vs_m, pred.max_abs_diff(m));
    vs_ls = std::max(vs_ls, pred.max_abs_diff(ls));
    ls_vs_m = std::max(ls_vs_m, ls.max_abs_diff(m));
  }
  const double secs = seconds_since(t0);
  report(vs_m <= 0.05 && vs_ls <= 0.05 && ls_vs_m <= 1e-8 && secs < 60.0, "oracle-equivalence",
         fmt("1000 sets: max|pred-M| %.4f, max|pred-LS| %.4f (<= 0.05), max|LS-M| %.1e (<= 1e-8), %.1f s", vs_m,
             vs_ls, ls_vs_m, secs));
}

void self_registration(const RegressorModel& model, const FilterBank& bank, const std::filesystem::path& data) {
  std::vector<std::pair<std::string, Raster>> images;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) images.emplace_back("phantom " + std::to_string(seed), make_phantom(seed));
  for (const char* name : {"fixed.png", "moving.png"}) images.emplace_back(name, load_raster(data / name));

  double worst_dice = 1.0, worst_ssim = 1.0, worst_mse = 0.0, worst_param = 0.0;
  for (const auto& [name, img] : images) {
    const RegistrationResult r = register_images(img, img, model, bank);
    worst_dice = std::min(worst_dice, r.after.dice);
    worst_ssim = std::min(worst_ssim, r.after.ssim);
    worst_mse = std::max(worst_mse, r.after.mse);
    worst_param = std::max(worst_param, r.params.max_abs_diff(AffineParams::identity()));
  }
  const bool ok = worst_dice >= 0.99 && worst_ssim >= 0.98 && worst_mse <= 1e-3 && worst_param <= 0.02;
  report(ok, "self-registration",
         fmt("%zu images: min Dice %.4f (>= 0.99), min SSIM %.4f (>= 0.98), max MSE %.2e (<= 1e-3), "
             "max |M-I| %.4f (<= 0.02)",
             images.size(), worst_dice, worst_ssim, worst_mse, worst_param));
}

void synthetic_recovery(const RegressorModel& model, const FilterBank& bank) {
  constexpr int kTrials = 100;
  int improved = 0;
  double dd = 0.0, dm = 0.0, ds = 0.0, dmse = 0.0;
  for (int i = 0; i < kTrials; ++i) {
    const Raster fixed = make_phantom(derive_seed(777, i));
    const InducedTransform t = random_affine(derive_seed(778, i), {}, fixed.extent(), image_center(fixed));
    const Raster moving = warp_affine(fixed, t.params);
    RegisterOptions options;
    options.seed = static_cast<std::uint64_t>(i);
    const RegistrationResult r = register_images(fixed, moving, model, bank, options);
    improved += r.after.dice > r.before.dice;
    dd += r.after.dice - r.before.dice;
    dm += r.after.mi - r.before.mi;
    ds += r.after.ssim - r.before.ssim;
    dmse += r.after.mse - r.before.mse;
  }
  const double frac = static_cast<double>(improved) / kTrials;
  const double mean_dd = dd / kTrials;
  report(frac >= 0.9 && mean_dd >= 0.2, "synthetic-recovery",
         fmt("100 phantoms at 50 px / 0.3 rad / 0.03 rad: improved %.0f%% (>= 90%%), mean dDice %+.3f (>= +0.20)",
             100.0 * frac, mean_dd));
  std::printf("      %-28s this run: dDice %+.3f  dMI %+.3f  dSSIM %+.3f  dMSE %+.4f\n", "", mean_dd, dm / kTrials,
              ds / kTrials, dmse / kTrials);
  std::printf("      %-28s reference: dDice +0.294  dMI +0.373  dSSIM +0.431  dMSE -0.0720 (not enforced)\n", "");
}

void figure_pair(const RegressorModel& model, const FilterBank& bank, const std::filesystem::path& data) {
  const Raster fixed = load_raster(data / "fixed.png");
  const Raster moving = load_raster(data / "moving.png");
  const RegistrationResult r = register_images(fixed, moving, model, bank);
  const bool ok = r.before.dice >= 0.40 && r.before.dice <= 0.50 && r.after.dice >= 0.85;
  report(ok, "shipped-pair-trajectory",
         fmt("data/fixed.png vs data/moving.png: Dice %.3f -> %.3f (before in [0.40, 0.50], after >= 0.85)",
             r.before.dice, r.after.dice));
}

void latency(const RegressorModel& model, const FilterBank& bank) {
  auto stage_medians = [&](int size, std::vector<double>& total, std::vector<double>& conv,
                           std::vector<double>& estimate) {
    PhantomOptions o;
    o.width = o.height = size;
    const double scale = size / 240.0;
    for (int i = 0; i < 5; ++i) {
      const Raster fixed = make_phantom(derive_seed(900, i), o);
      InductionBounds bounds;
      bounds.trans_max *= scale;
      const Raster moving = warp_affine(
          fixed, random_affine(derive_seed(901, i), bounds, fixed.extent(), image_center(fixed)).params);
      RegisterOptions options;
      options.pad = static_cast<int>(std::lround(kDefaultPad * scale));
      for (int rep = 0; rep < 3; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        const RegistrationResult r = register_images(fixed, moving, model, bank, options);
        total.push_back(1000.0 * seconds_since(t0));
        conv.push_back(r.timings.conv_ms);
        estimate.push_back(r.timings.estimate_ms);
      }
    }
  };
  std::vector<double> t240, c240, e240, t480, c480, e480;
  stage_medians(240, t240, c240, e240);
  stage_medians(480, t480, c480, e480);
  const double med = median(t240);
  const double est_ratio = median(e480) / median(e240);
  const double conv_ratio = median(c480) / median(c240);
  const bool ok = med <= 500.0 && est_ratio <= 2.0 && est_ratio >= 0.5 && conv_ratio >= 2.0;
  report(ok, "latency",
         fmt("240x240 median %.0f ms (<= 500, %d thread); estimator 480/240 x%.2f (within 2x), "
             "convolution 480/240 x%.2f (scales)",
             med, thread_count(), est_ratio, conv_ratio));
}

void metric_suite() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };
  auto raster = [](int w, int h, std::vector<float> v) {
    Raster img(w, h);
    std::copy(v.begin(), v.end(), img.samples().begin());
    return img;
  };
  const Raster mask = raster(3, 2, {1, 0, 1, 0, 1, 1});
  check(dice(mask, mask) == 1.0, "dice identical");
  check(dice(raster(2, 2, {1, 1, 0, 0}), raster(2, 2, {0, 0, 1, 1})) == 0.0, "dice disjoint");
  check(dice(raster(6, 1, {1, 1, 1, 1, 0, 0}), raster(6, 1, {0, 0, 1, 1, 1, 1})) == 0.5, "dice 4/4/2");

  Raster noise(32, 32);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& v : noise.samples()) v = u(rng);
  check(std::abs(ssim(noise, noise) - 1.0) <= 1e-9, "ssim self");
  check(std::abs(ssim(Raster(16, 16, 0.5f), Raster(16, 16, 0.5f)) - 1.0) <= 1e-9, "ssim constant");
  Raster checker(32, 32), negative(32, 32);
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) {
      checker(c, r) = ((c / 3 + r / 3) % 2) ? 1.0f : 0.0f;
      negative(c, r) = 1.0f - checker(c, r);
    }
  }
  check(ssim(checker, negative) < 0.2, "ssim negative");

  double mi_indep = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Raster a(64, 64), b(64, 64);
    std::mt19937_64 g(seed);
    for (float& v : a.samples()) v = u(g);
    for (float& v : b.samples()) v = u(g);
    mi_indep = std::max(mi_indep, mutual_information(a, b, 32));
  }
  check(mi_indep <= 0.3, "mi independent");
  Raster ramp(32, 32);
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) ramp(c, r) = static_cast<float>((c + 0.5) / 32.0);
  }
  const double mi_self = mutual_information(ramp, ramp, 32);
  check(std::abs(mi_self - std::log2(32.0)) <= 1e-9, "mi self = log2 bins");
  check(mutual_information(Raster(32, 32, 0.3f), noise) == 0.0, "mi constant");

  check(mse(noise, noise) == 0.0, "mse identical");
  check(mse(Raster(5, 5, 1.0f), Raster(5, 5, 0.0f)) == 1.0, "mse unit offset");
  check(mse(raster(2, 2, {1, 0, 0, 0}), Raster(2, 2, 0.0f)) == 0.25, "mse 2x2");

  std::string detail = fmt("12 examples; MI(X,X) = %.12f vs log2(32) = 5", mi_self);
  for (const auto& f : failed) detail += "; failed: " + f;
  report(failed.empty(), "metric-suite", detail);
}

void uncertainty_sanity(const RegressorModel& model, const FilterBank& bank) {
  const Raster fixed = make_phantom(41);
  const Raster moving =
      warp_affine(fixed, random_affine(42, {}, fixed.extent(), image_center(fixed)).params);
  UncertaintyOptions u;
  u.seed = 43;
  const UncertaintyReport a = estimate_uncertainty(fixed, moving, model, bank, u);
  const UncertaintyReport b = estimate_uncertainty(fixed, moving, model, bank, u);
  bool finite = a.n_trials == kDefaultTrials;
  double max_var = 0.0;
  for (double v : a.param_variance) {
    finite = finite && std::isfinite(v) && v >= 0.0;
    max_var = std::max(max_var, v);
  }
  for (float v : a.variance_map.samples()) finite = finite && std::isfinite(v) && v >= 0.0f;
  const bool reproducible = a.estimates == b.estimates && a.variance_map == b.variance_map;

  UncertaintyOptions none = u;
  none.fraction = 0.0;
  const UncertaintyReport z = estimate_uncertainty(fixed, moving, model, bank, none);
  double zero_max = 0.0;
  for (double v : z.param_variance) zero_max = std::max(zero_max, v);

  report(finite && reproducible && zero_max == 0.0, "uncertainty-sanity",
         fmt("n=%d: variances finite and >= 0 (max %.2e), fraction 0 -> max variance %.1e, reproducible %s",
             a.n_trials, max_var, zero_max, reproducible ? "yes" : "no"));
}

void gradient_check(const RegressorModel& shipped) {
  using Model = BasicRegressor<double>;
  Model model = shipped.cast<double>();
  std::mt19937_64 rng(51);
  Model::Matrix inputs(kInputWidth, 8), targets(kOutputWidth, 8);
  for (int b = 0; b < 8; ++b) {
    const TrainingSample s = generate_training_sample(rng);
    const ConditionedSubset cond = condition_input({s.input.data(), static_cast<std::size_t>(kInputWidth)});
    inputs.col(b) = cond.input.cast<double>();
    const AffineParams t = cond.condition_target(s.target);
    for (int k = 0; k < kOutputWidth; ++k) targets(k, b) = t[k];
  }
  RegressorGradient<double> grad;
  regressor_loss(model, inputs, targets, &grad);

  double worst = 0.0;
  int checked = 0;
  for (int attempt = 0; checked < 10 && attempt < 1000; ++attempt) {
    const bool enc = rng() % 2 == 0;
    auto& layers = enc ? model.encoder : model.head;
    auto& glayers = enc ? grad.encoder : grad.head;
    const std::size_t l = rng() % layers.size();
    const bool bias = rng() % 4 == 0;
    const Eigen::Index r = static_cast<Eigen::Index>(rng() % layers[l].outputs());
    const Eigen::Index c = bias ? 0 : static_cast<Eigen::Index>(rng() % layers[l].inputs());
    double& p = bias ? layers[l].biases(r) : layers[l].weights(r, c);
    const double analytic = bias ? glayers[l].biases(r) : glayers[l].weights(r, c);
    if (std::abs(analytic) < 1e-7) continue;
    const double h = 1e-4;
    const double saved = p;
    p = saved + h;
    const double up = regressor_loss<double>(model, inputs, targets, nullptr);
    p = saved - h;
    const double down = regressor_loss<double>(model, inputs, targets, nullptr);
    p = saved;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(numeric - analytic) / std::max(std::abs(numeric), std::abs(analytic)));
    ++checked;
  }
  report(checked == 10 && worst <= 1e-3, "gradient-check",
         fmt("%d parameters of the shipped model, step 1e-4: max relative error %.2e (<= 1e-3)", checked, worst));
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path model_path = argc > 1 ? argv[1] : ZSREG_TEST_MODEL;
  const std::filesystem::path data = argc > 2 ? argv[2] : ZSREG_SHIPPED_DATA;
  try {
    const RegressorModel model = load_regressor(model_path);
    const FilterBank bank = builtin_filter_bank();
    oracle_equivalence(model);
    self_registration(model, bank, data);
    synthetic_recovery(model, bank);
    figure_pair(model, bank, data);
    latency(model, bank);
    metric_suite();
    uncertainty_sanity(model, bank);
    gradient_check(model);
  } catch (const std::exception& e) {
    std::printf("FAIL  %-28s %s\n", "run", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
