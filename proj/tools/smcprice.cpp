#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smcprice/harness/experiment.hpp"
#include "smcprice/harness/selftest.hpp"

namespace {

using namespace smcprice;

constexpr int kConfigError = 2;
constexpr int kDegenerate = 3;

struct CommonFlags {
  std::string preset;
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> particles;
  std::optional<std::size_t> m;
  std::string method;
  std::string out;
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_method) {
  cmd->add_option("--preset", f.preset, "Named parameter set (table1, fig2a, fig2b, greeks-paper, asian-paper, paper)");
  cmd->add_option("--config", f.config_file, "key=value file with [section] headers");
  cmd->add_option("--set", f.sets, "Override section.key=value (repeatable)");
  cmd->add_option("--seed", f.seed, "Base seed; rep k uses seed + k");
  cmd->add_option("--reps", f.reps, "Repetitions");
  cmd->add_option("--particles", f.particles, "Particle count for the chosen method");
  cmd->add_option("--m", f.m, "Number of monitoring or averaging dates");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_flag("--print-config", f.print_config, "Print the resolved configuration and exit");
  if (with_method) cmd->add_option("--method", f.method, "Estimator");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Config resolve(const std::string& experiment, const CommonFlags& f) {
  Config cfg;
  if (!f.preset.empty()) {
    const std::string name = f.preset == "paper" ? experiment + "-paper" : f.preset;
    cfg = load_preset(name);
    const std::string preset_experiment = cfg.get_string("run.experiment", experiment);
    if (preset_experiment != experiment)
      throw ConfigError("preset '" + name + "' is for '" + preset_experiment + "', not '" + experiment + "'");
  }
  if (!f.config_file.empty()) cfg.merge(Config::parse(read_file(f.config_file), f.config_file));
  for (const auto& s : f.sets) cfg.apply_override(s);
  cfg.set("run.experiment", experiment);
  if (!f.method.empty()) cfg.set("run.method", f.method);
  if (f.seed) cfg.set("run.seed", std::to_string(*f.seed));
  if (f.reps) cfg.set("run.reps", std::to_string(*f.reps));
  if (f.m) cfg.set("option.m", std::to_string(*f.m));
  if (f.particles) {
    const bool is = experiment == "asian" && cfg.get_string("run.method", "smc") == "is";
    cfg.set(is ? "asian.is_particles" : "run.particles", std::to_string(*f.particles));
  }
  return cfg;
}

int run_subcommand(const std::string& experiment, const CommonFlags& f) {
  const Config cfg = resolve(experiment, f);
  if (f.print_config) {
    std::cout << cfg.to_text();
    return 0;
  }
  const auto e = ExperimentConfig::from(cfg);
  const auto report = run_experiment(e);
  const std::filesystem::path out = f.out.empty() ? std::filesystem::path("smcprice-out") / (experiment + "-" + e.method)
                                                  : std::filesystem::path(f.out);
  write_artifacts(report, out);
  for (const auto& c : report.columns()) {
    const auto a = aggregate(report.column(c));
    std::printf("%-18s mean %.8g  +/-2sd %.6g  var %.6g\n", c.c_str(), a.mean, a.two_sd, a.variance);
  }
  std::printf("artifacts written to %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential Monte Carlo option pricing experiments"};
  app.require_subcommand(1);

  CommonFlags barrier_flags, asian_flags, greeks_flags;
  auto* barrier = app.add_subcommand("barrier", "Down-and-out barrier call (--method sis|sir|tempered)");
  add_common(barrier, barrier_flags, true);
  auto* asian = app.add_subcommand("asian", "Arithmetic Asian call under BNS (--method smc|is)");
  add_common(asian, asian_flags, true);
  auto* greeks = app.add_subcommand("greeks", "Barrier delta and vega by the signed-measure recursion");
  add_common(greeks, greeks_flags, false);
  app.add_subcommand("selftest", "Run the quick oracle checks");

  std::vector<std::string> reports;
  auto* compare = app.add_subcommand("compare", "Variance ratio Var(B)/Var(A) of two report.json files");
  compare->add_option("reports", reports, "report_a.json report_b.json")->expected(2)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*barrier) return run_subcommand("barrier", barrier_flags);
    if (*asian) return run_subcommand("asian", asian_flags);
    if (*greeks) return run_subcommand("greeks", greeks_flags);
    if (*compare) {
      const auto a = read_report_json(reports[0]);
      const auto b = read_report_json(reports[1]);
      const auto v = compare_variance(a, b);
      std::printf("variance ratio %.6g  jackknife se %.4g\n", v.ratio, v.jackknife_se);
      return 0;
    }
    const auto results = run_selftest();
    bool ok = true;
    for (const auto& r : results) {
      std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
      ok = ok && r.pass;
    }
    return ok ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const DegenerateCloudError& e) {
    std::fprintf(stderr, "aborted: %s\n", e.what());
    return kDegenerate;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
