#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "smcprice/asian/asian_model.hpp"
#include "smcprice/asian/mcmc.hpp"
#include "smcprice/core/smc.hpp"

namespace smcprice {

/// Stage-1 potential schedule plus the stage-2 temperature grid, which rises
/// linearly from the stage-1 terminal exponent to exactly 1 in p steps.
struct AsianTemperSchedule {
  PotentialConfig stage1{6, 0.2, 0.035};
  std::size_t p = 20;

  double kappa_tilde(std::size_t k, std::size_t m) const {
    const double start = stage1.kappa_at(m);
    if (k == 0) return start;
    if (k >= p) return 1.0;
    return start + (1.0 - start) * static_cast<double>(k) / static_cast<double>(p);
  }

  void validate(std::size_t m) const {
    stage1.validate();
    const double end = stage1.kappa_at(m);
    if (!(end < 1.0) && p > 0) throw DomainError("AsianTemperSchedule: stage-1 exponent must end below 1");
    if (end > 1.0) throw DomainError("AsianTemperSchedule: stage-1 exponent exceeds 1");
  }
};

struct AsianRunResult {
  double price = 0.0;
  double z = 0.0;
  double log_z = 0.0;
  double terminal_kappa = 0.0;
  std::vector<double> ess_trace;
  std::size_t resample_count = 0;
  double price_move_rate = 0.0;
  double birth_death_rate = 0.0;
};

/// e^{-rT} Z sum_i w_i (nu_m/m - K)_+ / |nu_m/m - K|^kappa.
inline double asian_price_estimate(const ParticleCloud<AsianState>& cloud, double z,
                                   const AsianSpec& spec, double kappa) {
  const double weighted = cloud.expectation([&](const AsianState& x) {
    return tempered_call_ratio(asian_moneyness(x, spec, spec.m), kappa);
  });
  return std::exp(-spec.rate * spec.maturity()) * z * weighted;
}

/**
 * Two-stage SMC price: tempered SIR over the dates with process proposals,
 * then an SMC sampler on the full path space raising the exponent to 1 with
 * price and birth/death Metropolis moves.
 *
 * With sched.p == 0 the result is the stage-1 estimate alone.
 */
inline AsianRunResult price_asian_smc(const AsianSpec& spec, const AsianTemperSchedule& sched,
                                      std::size_t n, const ResampleConfig& cfg,
                                      const McmcConfig& mcmc = {}) {
  spec.validate();
  sched.validate(spec.m);
  AsianStage1Model model(spec, sched.stage1);
  auto run = sir_run(model, spec.m, n, cfg);

  MoveCounters counters;
  if (sched.p > 0) {
    // Targets differ only in the exponent of the potential.
    auto log_target = [&](const AsianState& x, std::size_t k) {
      return asian_log_potential(x, spec, spec.m, sched.kappa_tilde(k, spec.m));
    };
    auto mutate = [&](AsianState& x, std::size_t k, ParticleRng& rng) {
      asian_mcmc_sweeps(x, sched.kappa_tilde(k, spec.m), spec, mcmc, rng, &counters);
    };
    smc_sampler_run(run, sched.p, log_target, mutate, cfg);
  }

  AsianRunResult out;
  out.terminal_kappa = sched.p > 0 ? 1.0 : sched.stage1.kappa_at(spec.m);
  out.log_z = log_estimate_z(run.z);
  out.z = std::exp(out.log_z);
  out.price = asian_price_estimate(run.cloud, out.z, spec, out.terminal_kappa);
  out.ess_trace = run.trace.ess;
  out.resample_count = run.trace.resample_steps.size();
  out.price_move_rate = counters.price_rate();
  out.birth_death_rate = counters.birth_death_rate();
  return out;
}

}  // namespace smcprice
