#include "support.hpp"

#include "commands.hpp"
#include "zsreg/image_io.hpp"
#include "zsreg/phantom.hpp"
#include "zsreg/result_document.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace zsreg {
namespace {

std::map<std::string, std::string> read_kv(const std::filesystem::path& path) {
  std::ifstream in(path);
  return parse_key_values(in);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_quiet(const std::vector<std::string>& args, std::string* err = nullptr) {
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  const int code = cli::run(args);
  testing::internal::GetCapturedStdout();
  const std::string e = testing::internal::GetCapturedStderr();
  if (err) *err = e;
  return code;
}

std::filesystem::path write_phantom(const test::TempDir& dir, const std::string& name, std::uint64_t seed) {
  PhantomOptions o;
  o.width = 120;
  o.height = 120;
  const auto path = dir / name;
  save_png(make_phantom(seed, o), path, 16);
  return path;
}

TEST(Cli, MissingModelIsUsageError) {
  test::TempDir dir("cli_missing");
  const auto img = write_phantom(dir, "a.png", 1);
  const auto model = (dir / "nope.zrm").string();
  std::string err;
  EXPECT_EQ(run_quiet({"register", "--fixed", img.string(), "--moving", img.string(), "--model", model, "--out-dir",
                       dir.path().string()},
                      &err),
            2);
  EXPECT_NE(err.find(model), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(run_quiet({"register", "--bogus"}), 2); }

TEST(Cli, SelfRegisterWritesArtifacts) {
  test::TempDir dir("cli_self");
  const auto img = write_phantom(dir, "a.png", 2);
  ASSERT_EQ(run_quiet({"register", "--fixed", img.string(), "--moving", img.string(), "--model",
                       test::shipped_model().string(), "--pad", "32", "--out-dir", dir.path().string()}),
            0);
  const auto doc = read_kv(dir / "result.txt");
  EXPECT_GE(std::stod(doc.at("after.dice")), 0.99);
  EXPECT_EQ(doc.at("schema"), "zsreg-result");
  for (const char* f : {"warped.png", "warped.f32r", "keypoints.csv"}) EXPECT_TRUE(std::filesystem::exists(dir / f));
  EXPECT_FALSE(std::filesystem::exists(dir / "uncertainty_map.f32r"));
}

TEST(Cli, UncertaintyFlagWritesVarianceMap) {
  test::TempDir dir("cli_unc");
  const auto fixed = write_phantom(dir, "a.png", 3);
  ASSERT_EQ(run_quiet({"register", "--fixed", fixed.string(), "--moving", fixed.string(), "--model",
                       test::shipped_model().string(), "--pad", "32", "--uncertainty", "--n", "3", "--out-dir",
                       dir.path().string()}),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "uncertainty_map.f32r"));
  EXPECT_TRUE(std::filesystem::exists(dir / "uncertainty_map.png"));
  EXPECT_EQ(load_f32r(dir / "uncertainty_map.f32r").width(), 120);
  EXPECT_EQ(read_kv(dir / "result.txt").at("uncertainty.trials"), "3");
}

TEST(Cli, IterativeReportsIterations) {
  test::TempDir dir("cli_iter");
  const auto img = write_phantom(dir, "a.png", 4);
  ASSERT_EQ(run_quiet({"register", "--fixed", img.string(), "--moving", img.string(), "--model",
                       test::shipped_model().string(), "--pad", "32", "--iterative", "--out-dir",
                       dir.path().string()}),
            0);
  EXPECT_EQ(read_kv(dir / "result.txt").count("iterations"), 1u);
}

TEST(Cli, TrainSameSeedSameFile) {
  test::TempDir a("cli_train_a");
  test::TempDir b("cli_train_b");
  const std::vector<std::string> common{"train", "--seed", "7", "--epochs", "1", "--samples", "1024", "--batch", "64"};
  auto with_dir = [&](const test::TempDir& d) {
    auto args = common;
    args.insert(args.end(), {"--out-dir", d.path().string()});
    return args;
  };
  ASSERT_EQ(run_quiet(with_dir(a)), 0);
  ASSERT_EQ(run_quiet(with_dir(b)), 0);
  EXPECT_EQ(slurp(a / "regressor.zrm"), slurp(b / "regressor.zrm"));
  EXPECT_EQ(slurp(a / "training_log.csv").rfind("# status = trained", 0), 0u);
}

TEST(Cli, TrainZeroEpochsFlagsUntrained) {
  test::TempDir dir("cli_train0");
  ASSERT_EQ(run_quiet({"train", "--epochs", "0", "--out-dir", dir.path().string()}), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "regressor.zrm"));
  EXPECT_EQ(slurp(dir / "training_log.csv").rfind("# status = untrained", 0), 0u);
}

TEST(Cli, EvaluateSynthetic) {
  test::TempDir dir("cli_eval");
  ASSERT_EQ(run_quiet({"evaluate", "--synthetic", "4", "--size", "120", "--pad", "32", "--trans-max", "25",
                       "--model", test::shipped_model().string(), "--out-dir", dir.path().string()}),
            0);
  const auto summary = read_kv(dir / "summary.txt");
  EXPECT_EQ(summary.at("cases"), "4");
  EXPECT_GT(std::stod(summary.at("mean_delta_dice")), 0.0);
  EXPECT_LT(std::stod(summary.at("mean_delta_mse")), 0.0);
  EXPECT_TRUE(std::filesystem::exists(dir / "cases.csv"));
  EXPECT_NE(slurp(dir / "summary.txt").find("0.294"), std::string::npos);
}

TEST(Cli, EvaluateIdentityInduction) {
  test::TempDir dir("cli_eval0");
  ASSERT_EQ(run_quiet({"evaluate", "--synthetic", "3", "--size", "120", "--pad", "32", "--trans-max", "0",
                       "--rot-max", "0", "--shear-max", "0", "--model", test::shipped_model().string(), "--out-dir",
                       dir.path().string()}),
            0);
  const auto summary = read_kv(dir / "summary.txt");
  // Sub-pixel resampling grows the foreground by at most a one-pixel ring.
  EXPECT_NEAR(std::stod(summary.at("mean_delta_dice")), 0.0, 0.03);
  EXPECT_NEAR(std::stod(summary.at("mean_delta_ssim")), 0.0, 1e-3);
  EXPECT_NEAR(std::stod(summary.at("mean_delta_mse")), 0.0, 1e-4);
}

TEST(Cli, EvaluateDeterministic) {
  test::TempDir a("cli_eval_a");
  test::TempDir b("cli_eval_b");
  for (const auto* d : {&a, &b}) {
    ASSERT_EQ(run_quiet({"evaluate", "--synthetic", "2", "--size", "96", "--pad", "16", "--seed", "3", "--model",
                         test::shipped_model().string(), "--out-dir", d->path().string()}),
              0);
  }
  // Everything but the timing column matches.
  auto strip_timing = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
    return out;
  };
  EXPECT_EQ(strip_timing(slurp(a / "cases.csv")), strip_timing(slurp(b / "cases.csv")));
}

TEST(Cli, EvaluateEmptyCorpusFails) {
  test::TempDir dir("cli_empty");
  std::filesystem::create_directories(dir / "corpus");
  EXPECT_NE(run_quiet({"evaluate", "--corpus", (dir / "corpus").string(), "--model", test::shipped_model().string(),
                       "--out-dir", dir.path().string()}),
            0);
}

TEST(Cli, BenchWritesStageSummary) {
  test::TempDir dir("cli_bench");
  ASSERT_EQ(run_quiet({"bench", "--synthetic", "1", "--sizes", "96", "--repeats", "2", "--pad", "16", "--model",
                       test::shipped_model().string(), "--out-dir", dir.path().string()}),
            0);
  const auto summary = read_kv(dir / "bench_summary.txt");
  for (const char* key : {"size_96.median_conv_ms", "size_96.median_estimate_ms", "size_96.median_total_ms",
                          "size_96.p95_total_ms"}) {
    EXPECT_EQ(summary.count(key), 1u) << key;
  }
}

TEST(Cli, PhantomWritesPair) {
  test::TempDir dir("cli_phantom");
  ASSERT_EQ(run_quiet({"phantom", "--size", "64", "--out-dir", dir.path().string()}), 0);
  EXPECT_EQ(load_raster(dir / "fixed.png").width(), 64);
  EXPECT_EQ(load_raster(dir / "moving.png").height(), 64);
  EXPECT_EQ(read_kv(dir / "induced.txt").count("params.a11"), 1u);
}

TEST(ResultDocument, ParsesKeyValues) {
  std::istringstream in("# comment\n\nschema = zsreg-result\n a = 1.5 \nkey=value with spaces\n");
  const auto kv = parse_key_values(in);
  EXPECT_EQ(kv.at("schema"), "zsreg-result");
  EXPECT_EQ(kv.at("a"), "1.5");
  EXPECT_EQ(kv.at("key"), "value with spaces");
  EXPECT_EQ(kv.size(), 3u);
}

}  // namespace
}  // namespace zsreg
