#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "smcprice/harness/experiment.hpp"

namespace smcprice {
namespace {

Config small_barrier() {
  auto cfg = load_preset("fig2a");
  cfg.apply_override("run.reps=3");
  cfg.apply_override("run.particles=500");
  cfg.apply_override("option.m=6");
  return cfg;
}

TEST(Config, ParsesSectionsAndOverrides) {
  auto cfg = Config::parse("[run]\nreps = 4\nseed=9\n[option]\nstrike = 2.5\n");
  EXPECT_EQ(cfg.get_uint("run.reps", 1, 1, 10), 4u);
  EXPECT_EQ(cfg.get_uint("run.seed", 1, 0, 100), 9u);
  EXPECT_DOUBLE_EQ(cfg.get_double("option.strike", 0.0, 0.0, 10.0), 2.5);
  cfg.apply_override(" option.strike = 3 ");
  EXPECT_DOUBLE_EQ(cfg.get_double("option.strike", 0.0, 0.0, 10.0), 3.0);
  EXPECT_DOUBLE_EQ(cfg.get_double("market.r", 0.25, 0.0, 1.0), 0.25);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(Config::parse("[run]\npartciles = 5\n"), ConfigError);
  Config cfg;
  EXPECT_THROW(cfg.apply_override("run.partciles=5"), ConfigError);
  EXPECT_THROW(cfg.apply_override("no-equals-sign"), ConfigError);
}

TEST(Config, DiagnosticsNameLineOrField) {
  try {
    Config::parse("[run]\nreps = 2\nthis line is broken\n", "exp.ini");
    FAIL() << "expected a parse error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("exp.ini:3"), std::string::npos) << e.what();
  }
  auto cfg = Config::parse("[run]\nreps = many\n");
  try {
    cfg.get_uint("run.reps", 1, 1, 10);
    FAIL() << "expected a value error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.reps"), std::string::npos);
  }
  auto range = Config::parse("[run]\nthreshold = 1.5\n");
  EXPECT_THROW(ExperimentConfig::from(range), ConfigError);
}

TEST(Config, EveryPresetResolves) {
  for (const auto& [name, text] : preset_texts()) {
    const auto cfg = load_preset(name);
    EXPECT_NO_THROW(ExperimentConfig::from(cfg)) << name;
  }
  EXPECT_THROW(load_preset("nope"), ConfigError);
}

TEST(Config, PresetsEncodeStudySettings) {
  const auto t = ExperimentConfig::from(load_preset("fig2b"));
  EXPECT_EQ(t.method, "tempered");
  EXPECT_EQ(t.particles, 30000u);
  EXPECT_DOUBLE_EQ(t.threshold(), 15000.0);
  EXPECT_EQ(t.potential.intro_step, 10u);
  EXPECT_DOUBLE_EQ(t.potential.kappa0, 0.08);
  EXPECT_DOUBLE_EQ(t.potential.kappa_step, 0.045);
  const auto a = ExperimentConfig::from(load_preset("asian-paper"));
  EXPECT_EQ(a.m, 12u);
  EXPECT_EQ(a.is_particles, 4000u);
  EXPECT_DOUBLE_EQ(std::get<BnsParams>(a.model).mu, 0.07);
}

TEST(Config, ModelMismatchRejected) {
  auto cfg = load_preset("asian-paper");
  cfg.apply_override("market.model=gbm");
  EXPECT_THROW(ExperimentConfig::from(cfg), ConfigError);
}

TEST(Report, AggregatesRecomputeFromRows) {
  const auto report = run_experiment(ExperimentConfig::from(small_barrier()));
  ASSERT_EQ(report.rows.size(), 3u);
  double mean = 0.0;
  for (const auto& r : report.rows) mean += r.estimate;
  mean /= 3.0;
  EXPECT_EQ(aggregate(report.column("estimate")).mean, mean);
  EXPECT_EQ(report.rows[2].seed, report.base_seed + 2);
}

TEST(Report, DeterministicArtifacts) {
  const auto e = ExperimentConfig::from(small_barrier());
  const auto a = run_experiment(e), b = run_experiment(e);
  EXPECT_EQ(reps_csv(a), reps_csv(b));
  EXPECT_EQ(summary_csv(a), summary_csv(b));
  EXPECT_EQ(ess_trace_csv(a), ess_trace_csv(b));
}

TEST(Report, WorkerCountDoesNotChangeResults) {
  const auto e = ExperimentConfig::from(small_barrier());
  setenv("SMCPRICE_THREADS", "1", 1);
  const auto a = run_experiment(e);
  setenv("SMCPRICE_THREADS", "4", 1);
  const auto b = run_experiment(e);
  unsetenv("SMCPRICE_THREADS");
  EXPECT_EQ(reps_csv(a), reps_csv(b));
  EXPECT_EQ(ess_trace_csv(a), ess_trace_csv(b));
}

TEST(Report, EmbeddedConfigReruns) {
  const auto a = run_experiment(ExperimentConfig::from(small_barrier()));
  const auto b = run_experiment(ExperimentConfig::from(Config::parse(a.config_text)));
  EXPECT_EQ(a.config_text, b.config_text);
  EXPECT_EQ(reps_csv(a), reps_csv(b));
}

TEST(Report, JsonRoundTripsEstimates) {
  const auto a = run_experiment(ExperimentConfig::from(small_barrier()));
  const auto dir = std::filesystem::temp_directory_path() / "smcprice_report_test";
  write_artifacts(a, dir);
  const auto b = read_report_json(dir / "report.json");
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].estimate, b.rows[i].estimate);
  EXPECT_EQ(a.config_text, b.config_text);
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "ess_trace.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Report, SeventeenDigitFloats) {
  EXPECT_EQ(format_g17(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_g17(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(CompareVariance, IdenticalAndScaled) {
  const std::vector<double> a = {1.0, 2.5, 0.5, 4.0, 3.0};
  std::vector<double> b;
  for (double x : a) b.push_back(10.0 * x);
  EXPECT_DOUBLE_EQ(compare_variance(a, a).ratio, 1.0);
  EXPECT_NEAR(compare_variance(a, b).ratio, 100.0, 1e-10);
  EXPECT_GT(compare_variance(a, b).jackknife_se, 0.0);
  EXPECT_THROW(compare_variance(std::vector<double>{1.0}, a), ConfigError);
}

TEST(Experiment, AsianAndGreeksRun) {
  auto asian = load_preset("asian-paper");
  asian.apply_override("run.reps=2");
  asian.apply_override("run.particles=200");
  asian.apply_override("option.m=4");
  asian.apply_override("potential.intro_step=2");
  const auto smc = run_experiment(ExperimentConfig::from(asian));
  EXPECT_EQ(smc.extra_names.size(), smc.rows[0].extras.size());
  asian.apply_override("run.method=is");
  asian.apply_override("asian.is_particles=300");
  const auto is = run_experiment(ExperimentConfig::from(asian));
  EXPECT_GT(is.rows[0].estimate, 0.0);

  auto greeks = load_preset("greeks-paper");
  greeks.apply_override("run.reps=2");
  greeks.apply_override("run.particles=100");
  greeks.apply_override("option.m=3");
  greeks.apply_override("greeks.fd_particles=1000");
  const auto g = run_experiment(ExperimentConfig::from(greeks));
  EXPECT_TRUE(std::isfinite(g.rows[1].extras[2]));
}

TEST(Experiment, DegenerateCloudPropagates) {
  auto cfg = small_barrier();
  cfg.apply_override("option.barrier=9.99");
  cfg.apply_override("option.upper=10.01");
  cfg.apply_override("market.sigma=0.000001");
  cfg.apply_override("market.r=1");
  EXPECT_THROW(run_experiment(ExperimentConfig::from(cfg)), DegenerateCloudError);
}

}  // namespace
}  // namespace smcprice
