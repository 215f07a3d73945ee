#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "inflation/experiments.hpp"

namespace inflation {
namespace {

TEST(Fit, ExactPowerLaw) {
  std::vector<std::pair<double, double>> pairs;
  for (double mu : {16.0, 32.0, 64.0, 128.0}) pairs.emplace_back(mu, 3.0 * std::pow(mu, 1.5));
  const FitResult f = fit_exponent(pairs);
  EXPECT_NEAR(f.slope, 1.5, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
}

TEST(Fit, ConstantDataHasZeroSlope) {
  const FitResult f = fit_exponent({{16, 2.0}, {32, 2.0}, {64, 2.0}});
  EXPECT_NEAR(f.slope, 0.0, 1e-14);
  EXPECT_EQ(f.r2, 1.0);
}

TEST(Fit, RecoversSlopeUnderNoise) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> noise(-0.05, 0.05);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<double, double>> pairs;
    for (double mu : {16.0, 32.0, 64.0, 128.0}) pairs.emplace_back(mu, mu * mu * (1.0 + noise(rng)));
    EXPECT_NEAR(fit_exponent(pairs).slope, 2.0, 0.15);
  }
}

TEST(Fit, RejectsDegenerateInput) {
  EXPECT_THROW(fit_exponent({{16, 1.0}, {32, 2.0}}), std::invalid_argument);
  EXPECT_THROW(fit_exponent({{16, 1.0}, {32, 0.0}, {64, 2.0}}), std::invalid_argument);
  EXPECT_THROW(fit_exponent({{16, 1.0}, {-32, 1.0}, {64, 2.0}}), std::invalid_argument);
  EXPECT_THROW(fit_exponent({{16, 1.0}, {32, NAN}, {64, 2.0}}), std::invalid_argument);
  EXPECT_THROW(fit_exponent({{16, 1.0}, {16, 2.0}, {16, 3.0}}), std::invalid_argument);
}

TEST(Config, ParsesKeyValueText) {
  const Settings s = parse_config_text("# sweep\nexperiment = inflate\n\nmu = 16, 32,64  # list\neps=0.9\n");
  ASSERT_EQ(s.size(), 3u);
  ExperimentConfig cfg = resolve_config({}, s, {});
  EXPECT_EQ(cfg.experiment, "inflate");
  EXPECT_EQ(cfg.mus, (std::vector<double>{16, 32, 64}));
  EXPECT_EQ(cfg.eps, 0.9);
  EXPECT_THROW(parse_config_text("mu 16\n"), ConfigError);
  EXPECT_THROW(parse_config_text("= 3\n"), ConfigError);
}

TEST(Config, FlagsOverrideFile) {
  const Settings file{{"s", "0.25"}, {"mode", "ns"}, {"grid", "64"}};
  const Settings flags{{"grid", "256"}, {"n-override", "2"}};
  const ExperimentConfig cfg = resolve_config({}, file, flags);
  EXPECT_EQ(cfg.s, 0.25);
  EXPECT_EQ(cfg.mode, Mode::viscous);
  EXPECT_EQ(cfg.grid, 256);
  ASSERT_TRUE(cfg.n_override.has_value());
  EXPECT_EQ(*cfg.n_override, 2.0);
  EXPECT_EQ(cfg.params(32).N, 2.0);
}

TEST(Config, RejectsBadSettings) {
  ExperimentConfig cfg;
  EXPECT_THROW(apply_setting(cfg, "bogus", "1"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "eps", "abc"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "grid", "1.5"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "mode", "stokes"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "swirl_free", "maybe"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "s", ""), ConfigError);
  EXPECT_THROW(read_config_file("/nonexistent/inflation.cfg"), ConfigError);
  cfg.experiment = "nothing";
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(Table, CsvRoundTripIsExact) {
  Table t;
  t.columns = {"mu", "value"};
  t.add({16.0, 0.1});
  t.add({32.0, 1.0 / 3.0});
  t.add({64.0, 6.02214076e23});
  const std::string text = to_csv(t);
  const Table back = parse_csv(text);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(to_csv(back), text);
  EXPECT_THROW(t.add({1.0}), std::logic_error);
  EXPECT_THROW((void)t.column("missing"), std::invalid_argument);
  const FitResult f = cmd_fit(back, "mu", "value");
  EXPECT_EQ(f.pairs.size(), 3u);
}

TEST(Result, ExitCodes) {
  ExperimentResult r;
  r.assertions.push_back(check_range("a", "x", 1.0, 0.0, 2.0));
  EXPECT_EQ(r.exit_code(), 0);
  r.assertions.push_back(check_range("b", "x", NAN, -INFINITY, INFINITY));
  EXPECT_FALSE(r.assertions.back().pass);
  EXPECT_EQ(r.exit_code(), 1);
  r.aborted = true;
  EXPECT_EQ(r.exit_code(), 3);
}

TEST(Experiments, VerifyDataIsDeterministicAcrossThreads) {
  ExperimentConfig cfg;
  cfg.experiment = "verify-data";
  cfg.grid = 32;
  cfg.mus = {16, 32, 64};
  cfg.threads = 1;
  const ExperimentResult a = run_experiment(cfg);
  cfg.threads = 3;
  const ExperimentResult b = run_experiment(cfg);
  EXPECT_EQ(to_csv(a.table), to_csv(b.table));
  EXPECT_EQ(a.table.rows.size(), 3u);
  EXPECT_EQ(fits_csv(a), fits_csv(b));
}

TEST(Experiments, NormsScaleWithEpsSquared) {
  ExperimentConfig cfg;
  cfg.grid = 32;
  cfg.mus = {16, 32, 64};
  cfg.threads = 1;
  cfg.eps = 0.5;
  const ExperimentResult a = cmd_verify_data(cfg);
  cfg.eps = 0.25;
  const ExperimentResult b = cmd_verify_data(cfg);
  for (const std::string col : {"hs_norm", "l2_norm", "w12_norm"}) {
    const auto k = a.table.column(col);
    for (std::size_t i = 0; i < a.table.rows.size(); ++i)
      EXPECT_NEAR(b.table.rows[i][k], a.table.rows[i][k] / 4.0, 1e-12 * a.table.rows[i][k]) << col;
  }
}

TEST(Experiments, SweepMustBeIncreasing) {
  ExperimentConfig cfg;
  cfg.grid = 32;
  cfg.mus = {32, 16, 64};
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg.mus = {16, 32};
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(Experiments, OutputsAreWritten) {
  ExperimentConfig cfg;
  cfg.grid = 32;
  cfg.threads = 1;
  const ExperimentResult r = run_experiment(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "inflation_outputs_test";
  std::filesystem::create_directories(dir);
  const std::string stem = (dir / "vd").string();
  write_outputs(r, stem);
  for (const char* ext : {".csv", ".fits.csv", ".assertions.csv", ".plot.py"})
    EXPECT_TRUE(std::filesystem::exists(stem + ext)) << ext;
  std::ifstream in(stem + ".csv");
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), to_csv(r.table));
  std::filesystem::remove_all(dir);
}

TEST(Workers, ParallelForVisitsEveryIndexAndRethrows) {
  std::vector<int> hits(50, 0);
  parallel_for(hits.size(), 4, [&](std::size_t k) { hits[k] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t k) {
                              if (k == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

}  // namespace
}  // namespace inflation
