#include "commands.hpp"

#include "zsreg/conv_features.hpp"
#include "zsreg/error.hpp"
#include "zsreg/image_io.hpp"
#include "zsreg/parallel.hpp"
#include "zsreg/phantom.hpp"
#include "zsreg/registration.hpp"
#include "zsreg/result_document.hpp"
#include "zsreg/training.hpp"
#include "zsreg/uncertainty.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

namespace zsreg::cli {
namespace {

namespace fs = std::filesystem;

// Reference values for the comparison row of the evaluation summary.
constexpr double kReferenceDeltaDice = 0.294;
constexpr double kReferenceDeltaMi = 0.373;
constexpr double kReferenceDeltaSsim = 0.431;
constexpr double kReferenceDeltaMse = -0.072;
constexpr double kReferenceSeconds = 0.2;

struct UsageError : Error {
  using Error::Error;
};

struct PipelineFlags {
  std::string bank;
  std::string model = ZSREG_DEFAULT_MODEL;
  double threshold_frac = kDefaultThresholdFraction;
  int pad = kDefaultPad;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

struct InductionFlags {
  InductionBounds bounds;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
  cmd->add_option("--bank", f.bank, "Filter bank (.zrw); the built-in bank when omitted");
  cmd->add_option("--model", f.model, "Regressor model (.zrm)")->capture_default_str();
  cmd->add_option("--threshold-frac", f.threshold_frac, "Feature-map threshold as a fraction of the map maximum")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--pad", f.pad, "Zero padding per side, pixels")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  cmd->add_option("--out-dir", f.out_dir, "Directory receiving every output file")->capture_default_str();
}

void add_induction_flags(CLI::App* cmd, InductionFlags& f) {
  cmd->add_option("--trans-max", f.bounds.trans_max, "Induced translation bound, pixels")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--rot-max", f.bounds.rot_max, "Induced rotation bound, radians")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--shear-max", f.bounds.shear_max, "Induced shear bound, radians")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

void require_file(const std::string& path, const char* what) {
  if (path.empty() || !fs::is_regular_file(path)) {
    throw UsageError(std::string(what) + " not found: " + path);
  }
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

RegisterOptions register_options(const PipelineFlags& f) {
  RegisterOptions o;
  o.pad = f.pad;
  o.threshold_fraction = f.threshold_frac;
  o.seed = f.seed;
  return o;
}

FilterBank load_bank(const PipelineFlags& f) {
  if (f.bank.empty()) return builtin_filter_bank();
  require_file(f.bank, "filter bank");
  return load_filter_bank(f.bank);
}

RegressorModel load_model(const PipelineFlags& f) {
  require_file(f.model, "model file");
  return load_regressor(f.model);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// ---------------------------------------------------------------- register

struct RegisterFlags {
  PipelineFlags pipe;
  std::string fixed;
  std::string moving;
  bool uncertainty = false;
  int n = kDefaultTrials;
  double blacken_frac = kDefaultBlackenFraction;
  bool iterative = false;
  double lr = 0.5;
  int max_iters = 10;
};

int cmd_register(const RegisterFlags& f) {
  require_file(f.fixed, "fixed image");
  require_file(f.moving, "moving image");
  const RegressorModel model = load_model(f.pipe);
  const FilterBank bank = load_bank(f.pipe);
  const Raster fixed = load_raster(f.fixed);
  const Raster moving = load_raster(f.moving);
  const fs::path out = prepare_out_dir(f.pipe.out_dir);
  const RegisterOptions options = register_options(f.pipe);

  const auto start = std::chrono::steady_clock::now();
  ResultDocument doc;
  if (f.iterative) {
    IterativeResult it = iterative_register(fixed, moving, model, bank, {f.lr, f.max_iters}, options);
    doc.iterations = it.iterations;
    doc.result = std::move(it.final);
  } else {
    doc.result = register_images(fixed, moving, model, bank, options);
  }
  doc.wall_ms = elapsed_ms(start);
  if (f.uncertainty) {
    UncertaintyOptions u;
    u.trials = f.n;
    u.fraction = f.blacken_frac;
    u.seed = f.pipe.seed;
    doc.uncertainty = estimate_uncertainty(fixed, moving, model, bank, u, options);
    save_f32r(doc.uncertainty->variance_map, out / "uncertainty_map.f32r");
    save_png(rescale_unit(doc.uncertainty->variance_map), out / "uncertainty_map.png");
  }

  save_png(doc.result.warped, out / "warped.png");
  save_f32r(doc.result.warped, out / "warped.f32r");
  {
    std::ofstream kp(out / "keypoints.csv");
    write_keypoints_csv(kp, doc.result.fixed_keypoints, doc.result.moving_keypoints);
  }
  std::ofstream result(out / "result.txt");
  write_result_document(result, doc);
  write_result_document(std::cout, doc);
  if (!result) throw IoError("cannot write " + (out / "result.txt").string());
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainFlags {
  TrainingConfig config;
  std::string arch = "pooled";
  std::string layout = "varied";
  std::string out_dir = ".";
  std::string output = "regressor.zrm";
  std::size_t evaluate_samples = 10'000;
};

int cmd_train(TrainFlags f) {
  f.config.architecture = f.arch == "dense" ? Architecture::dense : Architecture::pooled;
  f.config.layout = f.layout == "uniform" ? PointLayout::uniform : PointLayout::varied;
  const fs::path out = prepare_out_dir(f.out_dir);
  const auto start = std::chrono::steady_clock::now();
  const TrainingResult result = train_regressor(f.config);
  const double seconds = elapsed_ms(start) / 1000.0;
  save_regressor(result.model, out / f.output);

  std::ofstream log(out / "training_log.csv");
  log << "# status = " << (result.trained ? "trained" : "untrained") << '\n';
  log << "epoch,train_loss,validation_loss,validation_rmse\n";
  log << std::setprecision(8);
  for (const auto& e : result.epochs) {
    log << e.epoch << ',' << e.train_loss << ',' << e.validation_loss << ',' << e.validation_rmse << '\n';
  }
  const HeldOutReport held_out = evaluate_held_out(result.model, f.evaluate_samples, f.config.seed + 1'000'003);
  std::cout << "status = " << (result.trained ? "trained" : "untrained") << '\n'
            << "parameters = " << result.model.parameter_count() << '\n'
            << "validation_loss = " << result.validation_loss << '\n'
            << "held_out_rmse = " << held_out.rmse << '\n'
            << "held_out_max_abs_error = " << held_out.max_abs_error << '\n'
            << "seconds = " << seconds << '\n'
            << "model = " << (out / f.output).string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateFlags {
  PipelineFlags pipe;
  InductionFlags induce;
  std::string corpus;
  int synthetic = 0;
  int size = 240;
};

struct CaseRecord {
  std::string source;
  InducedTransform induced;
  RegistrationResult result;
  double param_error = 0.0;  // vs the inverse of the induced transform
  double wall_ms = 0.0;
  std::string error;
};

std::vector<std::pair<std::string, std::function<Raster()>>> collect_inputs(const std::string& corpus, int synthetic,
                                                                           int size, std::uint64_t seed) {
  std::vector<std::pair<std::string, std::function<Raster()>>> inputs;
  if (!corpus.empty()) {
    if (!fs::is_directory(corpus)) throw UsageError("corpus directory not found: " + corpus);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(corpus)) {
      const auto ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".png" || ext == ".f32r")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) inputs.emplace_back(p.filename().string(), [p] { return load_raster(p); });
  }
  for (int i = 0; i < synthetic; ++i) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
    PhantomOptions po;
    po.width = po.height = size;
    inputs.emplace_back("phantom-" + std::to_string(i), [s, po] { return make_phantom(s, po); });
  }
  return inputs;
}

int cmd_evaluate(const EvaluateFlags& f) {
  const auto inputs = collect_inputs(f.corpus, f.synthetic, f.size, f.pipe.seed);
  if (inputs.empty()) throw UsageError("evaluate: empty corpus (give --corpus DIR or --synthetic N)");
  const RegressorModel model = load_model(f.pipe);
  const FilterBank bank = load_bank(f.pipe);
  const fs::path out = prepare_out_dir(f.pipe.out_dir);
  const RegisterOptions options = register_options(f.pipe);

  std::vector<CaseRecord> cases(inputs.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    CaseRecord& rec = cases[i];
    rec.source = inputs[i].first;
    try {
      const Raster fixed = inputs[i].second();
      rec.induced = random_affine(derive_seed(f.pipe.seed ^ 0xA5A5A5A5ULL, i), f.induce.bounds, fixed.extent(),
                                  image_center(fixed));
      const Raster moving = warp_affine(fixed, rec.induced.params);
      const auto start = std::chrono::steady_clock::now();
      rec.result = register_images(fixed, moving, model, bank, options);
      rec.wall_ms = elapsed_ms(start);
      rec.param_error = rec.result.params.max_abs_diff(inverse(rec.induced.params));
    } catch (const Error& e) {
      rec.error = e.what();
    }
  });

  std::ofstream csv(out / "cases.csv");
  csv << "case,source,rotation,shear,tx_px,ty_px,dice_before,dice_after,ssim_before,ssim_after,"
         "mi_before,mi_after,mse_before,mse_after,param_error,status,wall_ms\n";
  csv << std::setprecision(8);
  double sum_dd = 0.0, sum_dm = 0.0, sum_ds = 0.0, sum_dmse = 0.0, sum_ms = 0.0;
  int ok = 0, improved = 0;
  std::vector<double> times;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const CaseRecord& c = cases[i];
    const auto& b = c.result.before;
    const auto& a = c.result.after;
    csv << i << ',' << c.source << ',' << c.induced.rotation << ',' << c.induced.shear << ',' << c.induced.tx_px << ','
        << c.induced.ty_px << ',' << b.dice << ',' << a.dice << ',' << b.ssim << ',' << a.ssim << ',' << b.mi << ','
        << a.mi << ',' << b.mse << ',' << a.mse << ',' << c.param_error << ','
        << (c.error.empty() ? "ok" : "failed") << ',' << c.wall_ms << '\n';
    if (!c.error.empty()) {
      std::cerr << "case " << i << " (" << c.source << ") failed: " << c.error << '\n';
      continue;
    }
    ++ok;
    improved += a.dice > b.dice ? 1 : 0;
    sum_dd += a.dice - b.dice;
    sum_dm += a.mi - b.mi;
    sum_ds += a.ssim - b.ssim;
    sum_dmse += a.mse - b.mse;
    sum_ms += c.wall_ms;
    times.push_back(c.wall_ms);
  }
  if (ok == 0) throw Error("evaluate: every case failed");
  const double n = ok;
  std::ostringstream summary;
  summary << std::setprecision(6) << std::fixed;
  summary << "cases = " << cases.size() << '\n'
          << "succeeded = " << ok << '\n'
          << "dice_improved_fraction = " << improved / n << '\n'
          << "mean_delta_dice = " << sum_dd / n << '\n'
          << "mean_delta_mi = " << sum_dm / n << '\n'
          << "mean_delta_ssim = " << sum_ds / n << '\n'
          << "mean_delta_mse = " << sum_dmse / n << '\n'
          << "mean_seconds = " << sum_ms / n / 1000.0 << '\n'
          << "median_seconds = " << median(times) / 1000.0 << '\n'
          << "#\n"
          << "# technique        dDice     dMI       dSSIM     dMSE      s/image\n"
          << "# this run      " << std::showpos << std::setw(9) << sum_dd / n << ' ' << std::setw(9) << sum_dm / n
          << ' ' << std::setw(9) << sum_ds / n << ' ' << std::setw(9) << sum_dmse / n << ' ' << std::noshowpos
          << std::setw(9) << sum_ms / n / 1000.0 << '\n'
          << "# reference     " << std::showpos << std::setw(9) << kReferenceDeltaDice << ' ' << std::setw(9)
          << kReferenceDeltaMi << ' ' << std::setw(9) << kReferenceDeltaSsim << ' ' << std::setw(9)
          << kReferenceDeltaMse << ' ' << std::noshowpos << std::setw(9) << kReferenceSeconds << '\n';
  std::ofstream(out / "summary.txt") << summary.str();
  std::cout << summary.str();
  return kExitOk;
}

// ------------------------------------------------------------------- bench

struct BenchFlags {
  PipelineFlags pipe;
  std::string corpus;
  int synthetic = 5;
  std::vector<int> sizes{240};
  int repeats = 3;
};

int cmd_bench(const BenchFlags& f) {
  const RegressorModel model = load_model(f.pipe);
  const FilterBank bank = load_bank(f.pipe);
  const fs::path out = prepare_out_dir(f.pipe.out_dir);
  const RegisterOptions options = register_options(f.pipe);

  std::ofstream csv(out / "bench.csv");
  csv << "size,case,repeat,preprocess_ms,conv_ms,com_ms,estimate_ms,warp_ms,metrics_ms,total_ms,wall_ms\n";
  std::ostringstream summary;
  summary << std::setprecision(4) << std::fixed;
  std::vector<int> sizes = f.corpus.empty() ? f.sizes : std::vector<int>{0};
  for (int size : sizes) {
    const auto inputs = collect_inputs(f.corpus, f.corpus.empty() ? f.synthetic : 0, size, f.pipe.seed);
    if (inputs.empty()) throw UsageError("bench: empty corpus");
    std::array<std::vector<double>, 6> stage;
    std::vector<double> wall;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const Raster fixed = inputs[i].second();
      const InducedTransform t =
          random_affine(derive_seed(f.pipe.seed, i), InductionBounds{}, fixed.extent(), image_center(fixed));
      const Raster moving = warp_affine(fixed, t.params);
      for (int r = 0; r < f.repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        const RegistrationResult res = register_images(fixed, moving, model, bank, options);
        const double ms = elapsed_ms(start);
        const StageTimings& s = res.timings;
        const std::array<double, 6> parts{s.preprocess_ms, s.conv_ms, s.com_ms, s.estimate_ms, s.warp_ms, s.metrics_ms};
        for (std::size_t k = 0; k < 6; ++k) stage[k].push_back(parts[k]);
        wall.push_back(ms);
        csv << fixed.width() << ',' << i << ',' << r;
        for (double p : parts) csv << ',' << p;
        csv << ',' << s.total_ms() << ',' << ms << '\n';
      }
    }
    const std::string tag = f.corpus.empty() ? std::to_string(size) : "corpus";
    const std::array<const char*, 6> names{"preprocess", "conv", "com", "estimate", "warp", "metrics"};
    for (std::size_t k = 0; k < 6; ++k) {
      summary << "size_" << tag << ".median_" << names[k] << "_ms = " << median(stage[k]) << '\n';
    }
    summary << "size_" << tag << ".median_total_ms = " << median(wall) << '\n';
    summary << "size_" << tag << ".p95_total_ms = " << percentile(wall, 0.95) << '\n';
  }
  summary << "threads = " << thread_count() << '\n';
  std::ofstream(out / "bench_summary.txt") << summary.str();
  std::cout << summary.str();
  return kExitOk;
}

// ----------------------------------------------------------------- phantom

struct PhantomFlags {
  InductionFlags induce;
  std::uint64_t seed = 0;
  std::uint64_t transform_seed = 0;
  int size = 240;
  std::string out_dir = ".";
};

int cmd_phantom(const PhantomFlags& f) {
  const fs::path out = prepare_out_dir(f.out_dir);
  PhantomOptions po;
  po.width = po.height = f.size;
  const Raster fixed = make_phantom(f.seed, po);
  const InducedTransform t = random_affine(f.transform_seed, f.induce.bounds, fixed.extent(), image_center(fixed));
  const Raster moving = warp_affine(fixed, t.params);
  save_png(fixed, out / "fixed.png", 16);
  save_png(moving, out / "moving.png", 16);
  std::ofstream doc(out / "induced.txt");
  doc << std::setprecision(12) << "rotation = " << t.rotation << "\nshear = " << t.shear << "\ntx_px = " << t.tx_px
      << "\nty_px = " << t.ty_px << '\n';
  const std::array<const char*, 6> names{"a11", "a12", "tx", "a21", "a22", "ty"};
  for (std::size_t k = 0; k < 6; ++k) doc << "params." << names[k] << " = " << t.params[k] << '\n';
  return kExitOk;
}

int cmd_export_bank(const std::string& path) {
  save_filter_bank(builtin_filter_bank(), path);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Zero-shot affine image registration from convolutional keypoints"};
  app.require_subcommand(1);

  RegisterFlags reg;
  auto* c_reg = app.add_subcommand("register", "Register a moving image onto a fixed image");
  c_reg->add_option("--fixed", reg.fixed, "Fixed image (PNG or .f32r)")->required();
  c_reg->add_option("--moving", reg.moving, "Moving image (PNG or .f32r)")->required();
  add_pipeline_flags(c_reg, reg.pipe);
  c_reg->add_flag("--uncertainty", reg.uncertainty, "Estimate parameter variance by random pixel blackening");
  c_reg->add_option("--n", reg.n, "Uncertainty trials")->check(CLI::Range(2, 10000))->capture_default_str();
  c_reg->add_option("--blacken-frac", reg.blacken_frac, "Fraction of pixels blackened per trial")
      ->check(CLI::Range(0.0, 0.999))
      ->capture_default_str();
  c_reg->add_flag("--iterative", reg.iterative, "Refine the estimate iteratively");
  c_reg->add_option("--lr", reg.lr, "Iterative step fraction")->check(CLI::Range(1e-6, 1.0))->capture_default_str();
  c_reg->add_option("--max-iters", reg.max_iters, "Iteration cap")->check(CLI::Range(1, 1000))->capture_default_str();

  TrainFlags train;
  auto* c_train = app.add_subcommand("train", "Train the parameter regressor on synthetic correspondences");
  c_train->add_option("--seed", train.config.seed, "Random seed")->capture_default_str();
  c_train->add_option("--epochs", train.config.epochs, "Passes")->check(CLI::NonNegativeNumber)->capture_default_str();
  c_train->add_option("--samples", train.config.samples_per_epoch, "Generated samples per pass")->capture_default_str();
  c_train->add_option("--batch", train.config.batch_size, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
  c_train->add_option("--lr", train.config.learning_rate, "Peak Adam step")->check(CLI::PositiveNumber)->capture_default_str();
  c_train->add_option("--arch", train.arch, "pooled or dense")
      ->check(CLI::IsMember({"pooled", "dense"}))
      ->capture_default_str();
  c_train->add_option("--layout", train.layout, "Fixed-point layouts in training batches: uniform or varied")
      ->check(CLI::IsMember({"uniform", "varied"}))
      ->capture_default_str();
  c_train->add_option("--out-dir", train.out_dir, "Output directory")->capture_default_str();
  c_train->add_option("--output", train.output, "Model file name inside --out-dir")->capture_default_str();

  EvaluateFlags eval;
  auto* c_eval = app.add_subcommand("evaluate", "Induce random transforms and measure registration quality");
  add_pipeline_flags(c_eval, eval.pipe);
  add_induction_flags(c_eval, eval.induce);
  c_eval->add_option("--corpus", eval.corpus, "Directory of PNG / .f32r images");
  c_eval->add_option("--synthetic", eval.synthetic, "Number of generated phantoms")->check(CLI::NonNegativeNumber);
  c_eval->add_option("--size", eval.size, "Phantom edge length, pixels")->check(CLI::Range(16, 8192))->capture_default_str();

  BenchFlags bench;
  auto* c_bench = app.add_subcommand("bench", "Per-stage latency of the registration pipeline");
  add_pipeline_flags(c_bench, bench.pipe);
  c_bench->add_option("--corpus", bench.corpus, "Directory of PNG / .f32r images");
  c_bench->add_option("--synthetic", bench.synthetic, "Phantoms per size")->check(CLI::PositiveNumber)->capture_default_str();
  c_bench->add_option("--sizes", bench.sizes, "Phantom edge lengths")->capture_default_str();
  c_bench->add_option("--repeats", bench.repeats, "Runs per pair")->check(CLI::PositiveNumber)->capture_default_str();

  PhantomFlags phantom;
  auto* c_phantom = app.add_subcommand("phantom", "Write a synthetic fixed/moving phantom pair");
  add_induction_flags(c_phantom, phantom.induce);
  c_phantom->add_option("--seed", phantom.seed, "Phantom seed")->capture_default_str();
  c_phantom->add_option("--transform-seed", phantom.transform_seed, "Induced transform seed")->capture_default_str();
  c_phantom->add_option("--size", phantom.size, "Edge length, pixels")->check(CLI::Range(16, 8192))->capture_default_str();
  c_phantom->add_option("--out-dir", phantom.out_dir, "Output directory")->capture_default_str();

  std::string bank_path;
  auto* c_bank = app.add_subcommand("export-bank", "Write the built-in filter bank as .zrw");
  c_bank->add_option("path", bank_path, "Output file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_reg) return cmd_register(reg);
    if (*c_train) return cmd_train(train);
    if (*c_eval) return cmd_evaluate(eval);
    if (*c_bench) return cmd_bench(bench);
    if (*c_phantom) return cmd_phantom(phantom);
    if (*c_bank) return cmd_export_bank(bank_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace zsreg::cli
