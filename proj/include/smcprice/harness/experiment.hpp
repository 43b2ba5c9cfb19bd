#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "smcprice/asian/asian_pricer.hpp"
#include "smcprice/asian/is_baseline.hpp"
#include "smcprice/barrier/barrier_pricer.hpp"
#include "smcprice/greeks/greeks.hpp"
#include "smcprice/harness/config.hpp"
#include "smcprice/harness/report.hpp"

namespace smcprice {

/// Typed, validated view of a Config.
struct ExperimentConfig {
  std::string experiment;  // barrier | asian | greeks
  std::string method;
  std::size_t reps = 1;
  std::uint64_t base_seed = 1;
  std::size_t particles = 1000;
  double threshold_fraction = 0.5;
  ResampleScheme scheme = ResampleScheme::systematic;

  PriceModel model = GbmParams{};
  double strike = 0.0;
  double barrier = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  std::size_t m = 1;
  double dt = 1.0;
  double rate = 0.0;
  PotentialConfig potential;

  std::size_t sampler_steps = 20;
  McmcConfig mcmc;
  std::size_t is_particles = 0;
  IsBaselineConfig is;

  std::size_t fd_particles = 0;
  double fd_step = 0.01;

  Config source;

  double threshold() const { return threshold_fraction * static_cast<double>(particles); }

  BarrierSpec barrier_spec() const {
    BarrierSpec spec = BarrierSpec::down_and_out(market_s0(), strike, rate, barrier, m, dt);
    for (auto& band : spec.intervals) band.upper = upper;
    return spec;
  }

  AsianSpec asian_spec() const {
    AsianSpec spec;
    spec.params = std::get<BnsParams>(model);
    spec.strike = strike;
    spec.m = m;
    spec.dt = dt;
    spec.rate = rate;
    return spec;
  }

  AsianTemperSchedule asian_schedule() const {
    AsianTemperSchedule s;
    s.stage1 = potential;
    s.p = sampler_steps;
    return s;
  }

  double market_s0() const {
    return std::visit([](const auto& p) { return p.s0; }, model);
  }

  static ExperimentConfig from(const Config& c) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr std::uint64_t big = std::numeric_limits<std::uint32_t>::max();
    ExperimentConfig e;
    e.source = c;
    e.experiment = c.get_choice("run.experiment", {"barrier", "asian", "greeks"}, "barrier");
    if (e.experiment == "barrier")
      e.method = c.get_choice("run.method", {"sis", "sir", "tempered"}, "sir");
    else if (e.experiment == "asian")
      e.method = c.get_choice("run.method", {"smc", "is"}, "smc");
    else
      e.method = c.get_choice("run.method", {"recursion"}, "recursion");
    e.reps = c.get_uint("run.reps", 1, 1, 1000000);
    e.base_seed = c.get_uint("run.seed", 1, 0, std::numeric_limits<std::uint64_t>::max());
    e.particles = c.get_uint("run.particles", 1000, 1, big);
    e.threshold_fraction = c.get_double("run.threshold", 0.5, 0.0, 1.0);
    e.scheme = c.get_choice("run.scheme", {"systematic", "multinomial"}, "systematic") == "multinomial"
                   ? ResampleScheme::multinomial
                   : ResampleScheme::systematic;

    const std::string model = c.get_choice("market.model", {"gbm", "bns"}, e.experiment == "asian" ? "bns" : "gbm");
    if (model == "gbm") {
      if (e.experiment == "asian") throw ConfigError("market.model: the Asian pricer needs model = bns");
      GbmParams p;
      p.r = c.get_double("market.r", 0.0, -1.0, 1.0);
      p.sigma = c.get_double("market.sigma", 0.2, 1e-6, 10.0);
      p.s0 = c.get_double("market.s0", 1.0, 1e-12, inf);
      e.model = p;
      e.rate = c.get_double("option.rate", p.r, -1.0, 1.0);
    } else {
      if (e.experiment == "greeks") throw ConfigError("market.model: Greeks need model = gbm");
      BnsParams p;
      p.mu = c.get_double("market.mu", 0.0, -10.0, 10.0);
      p.lambda = c.get_double("market.lambda", 1.0, 1e-9, 1e3);
      p.nu = c.get_double("market.nu", 0.5, 1e-12, 1e3);
      p.v0 = c.get_double("market.v0", p.nu, 0.0, 1e3);
      p.s0 = c.get_double("market.s0", 1.0, 1e-12, inf);
      e.model = p;
      e.rate = c.get_double("option.rate", 0.0, -1.0, 1.0);
    }
    e.strike = c.get_double("option.strike", e.market_s0(), 1e-12, inf);
    e.barrier = c.get_double("option.barrier", 0.0, 0.0, inf);
    e.upper = c.get_double("option.upper", inf, 0.0, inf);
    e.m = c.get_uint("option.m", 1, 1, 100000);
    e.dt = c.get_double("option.dt", 1.0, 1e-9, 1e3);
    e.potential.intro_step = c.get_uint("potential.intro_step", 0, 0, e.m);
    e.potential.kappa0 = c.get_double("potential.kappa0", 0.0, 0.0, 1.0);
    e.potential.kappa_step = c.get_double("potential.kappa_step", 0.0, 0.0, 1.0);

    e.sampler_steps = c.get_uint("asian.p", 20, 0, 100000);
    e.mcmc.sweeps = c.get_uint("asian.sweeps", 2, 0, 100000);
    e.mcmc.ratio = c.get_choice("asian.birth_death", {"corrected", "verbatim"}, "corrected") == "verbatim"
                       ? BirthDeathRatio::verbatim
                       : BirthDeathRatio::corrected;
    e.is_particles = c.get_uint("asian.is_particles", e.particles, 1, big);
    e.is.max_bisection_steps = c.get_uint("asian.bisection_steps", 300, 1, 100000);
    e.is.root_scan_points = c.get_uint("asian.root_scan_points", 64, 2, 100000);

    e.fd_particles = c.get_uint("greeks.fd_particles", 0, 0, big);
    e.fd_step = c.get_double("greeks.fd_step", 0.01, 1e-8, 0.5);

    try {
      if (e.experiment == "asian") {
        e.asian_spec().validate();
        if (e.method == "smc") e.asian_schedule().validate(e.m);
      } else {
        e.barrier_spec().validate();
        std::visit([](const auto& p) { p.validate(); }, e.model);
      }
      e.potential.validate();
    } catch (const DomainError& err) {
      throw ConfigError(err.what());
    }
    return e;
  }
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/**
 * Runs the configured experiment `reps` times with seeds base_seed + rep.
 * Throws DegenerateCloudError if a run loses every particle.
 */
inline RunReport run_experiment(const ExperimentConfig& e) {
  RunReport report;
  report.experiment = e.experiment;
  report.method = e.method;
  report.config_text = e.source.to_text();
  report.base_seed = e.base_seed;
  if (e.experiment == "asian" && e.method == "smc")
    report.extra_names = {"log_z", "price_move_rate", "birth_death_rate"};
  else if (e.experiment == "asian")
    report.extra_names = {"se", "nonunique_fraction", "fallback_fraction"};
  else if (e.experiment == "greeks")
    report.extra_names = {"vega", "pi_mass", "fd_delta"};
  else
    report.extra_names = {"z"};

  for (std::size_t rep = 0; rep < e.reps; ++rep) {
    RepRow row;
    row.rep = rep;
    row.seed = e.base_seed + rep;
    const auto t0 = std::chrono::steady_clock::now();
    const ResampleConfig rc{e.scheme, e.threshold(), row.seed};
    if (e.experiment == "barrier") {
      const auto spec = e.barrier_spec();
      BarrierRunResult r;
      if (e.method == "sis")
        r = price_barrier_sis(spec, e.model, e.particles, row.seed);
      else if (e.method == "sir")
        r = price_barrier_sir(spec, e.model, e.particles, rc);
      else
        r = price_barrier_tempered(spec, e.model, e.particles, rc, e.potential);
      row.estimate = r.price;
      row.ess_final = r.ess_final;
      row.resample_epochs = r.resample_count;
      row.ess_trace = r.ess_trace;
      row.extras = {r.z};
    } else if (e.experiment == "asian" && e.method == "smc") {
      const auto r = price_asian_smc(e.asian_spec(), e.asian_schedule(), e.particles, rc, e.mcmc);
      row.estimate = r.price;
      row.ess_final = r.ess_trace.empty() ? 0.0 : r.ess_trace.back();
      row.resample_epochs = r.resample_count;
      row.ess_trace = r.ess_trace;
      row.extras = {r.log_z, r.price_move_rate, r.birth_death_rate};
    } else if (e.experiment == "asian") {
      const auto r = price_asian_is(e.asian_spec(), e.is_particles, row.seed, e.is);
      row.estimate = r.price;
      row.extras = {r.se, r.nonunique_fraction, r.fallback_fraction};
    } else {
      const auto spec = e.barrier_spec();
      const auto& p = std::get<GbmParams>(e.model);
      const auto dr = greek_recursion_run(GbmBarrierGreekModel(spec, p, GbmGreek::delta), e.m, e.particles, row.seed);
      const auto vr = greek_recursion_run(GbmBarrierGreekModel(spec, p, GbmGreek::vega), e.m, e.particles, row.seed);
      const double fd =
          e.fd_particles > 0 ? barrier_fd_delta(spec, p, e.fd_particles, row.seed, e.fd_step)
                             : std::numeric_limits<double>::quiet_NaN();
      row.estimate = dr.estimate;
      row.extras = {vr.estimate, dr.pi_mass, fd};
    }
    row.wall_ms = detail::elapsed_ms(t0);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace smcprice
