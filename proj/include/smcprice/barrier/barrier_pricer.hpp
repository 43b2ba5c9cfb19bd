#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include "smcprice/core/smc.hpp"
#include "smcprice/models/bns.hpp"
#include "smcprice/models/gbm.hpp"

namespace smcprice {

/// Discretely monitored knock-out call.
struct BarrierSpec {
  std::vector<Interval> intervals;   // admissible band at t_1..t_m
  std::vector<double> monitor_times;  // t_1 < ... < t_m
  double strike = 0.0;
  double rate = 0.0;
  double s0 = 0.0;

  std::size_t m() const noexcept { return monitor_times.size(); }
  double maturity() const { return monitor_times.back(); }
  double dt(std::size_t n) const {
    return n == 1 ? monitor_times[0] : monitor_times[n - 1] - monitor_times[n - 2];
  }

  void validate() const {
    if (monitor_times.empty()) throw DomainError("BarrierSpec: need at least one monitoring date");
    if (intervals.size() != monitor_times.size())
      throw DomainError("BarrierSpec: one interval per monitoring date");
    if (!(strike > 0.0)) throw DomainError("BarrierSpec: strike must be positive");
    if (!(s0 > 0.0)) throw DomainError("BarrierSpec: s0 must be positive");
    double prev = 0.0;
    for (double t : monitor_times) {
      if (!(t > prev)) throw DomainError("BarrierSpec: monitoring times must increase");
      prev = t;
    }
    if (!intervals.front().contains(s0))
      throw DomainError("BarrierSpec: s0 outside the first admissible band");
  }

  /// Constant band [barrier, +inf) monitored at dt, 2dt, ..., m dt.
  static BarrierSpec down_and_out(double s0, double strike, double rate, double barrier,
                                  std::size_t m, double dt) {
    BarrierSpec spec;
    spec.s0 = s0;
    spec.strike = strike;
    spec.rate = rate;
    for (std::size_t i = 1; i <= m; ++i) {
      spec.monitor_times.push_back(static_cast<double>(i) * dt);
      spec.intervals.push_back(Interval{barrier, std::numeric_limits<double>::infinity()});
    }
    return spec;
  }
};

/// Temperature schedule for the |s - K|^kappa potential: zero before
/// `intro_step`, then kappa0 + (n - intro_step) * kappa_step.
struct PotentialConfig {
  std::size_t intro_step = 0;  // 0 disables the potential
  double kappa0 = 0.0;
  double kappa_step = 0.0;

  double kappa_at(std::size_t n) const noexcept {
    if (intro_step == 0 || n < intro_step) return 0.0;
    return kappa0 + static_cast<double>(n - intro_step) * kappa_step;
  }

  void validate() const {
    if (kappa0 < 0.0) throw DomainError("PotentialConfig: kappa0 must be nonnegative");
    if (kappa_step < 0.0) throw DomainError("PotentialConfig: schedule must be nondecreasing");
  }
};

using PriceModel = std::variant<GbmParams, BnsParams>;

struct BarrierState {
  double s = 0.0;
  double sigma_bar = 0.0;  // BNS only
};

/**
 * Conditioned-proposal model for the barrier integral: every particle is drawn
 * from the one-step law restricted to the next admissible band and weighted by
 * that band's probability, optionally times a potential ratio.
 */
template <class Dynamics>
class BarrierModel {
 public:
  using State = BarrierState;

  BarrierModel(const BarrierSpec& spec, Dynamics dynamics, PotentialConfig potential)
      : spec_(&spec),
        dynamics_(dynamics),
        potential_(potential),
        guard_events_(std::make_shared<std::atomic<std::size_t>>(0)) {}

  State initial(ParticleRng&) const { return dynamics_.initial(*spec_); }
  double initial_log_weight(const State&, ParticleRng&) const { return 0.0; }

  double advance(State& state, std::size_t n, ParticleRng& rng) const {
    const Interval& band = spec_->intervals[n - 1];
    const double kappa_prev = potential_.kappa_at(n - 1);
    const double kappa_now = potential_.kappa_at(n);
    double log_w = kappa_prev != 0.0 ? -kappa_prev * log_distance(state.s) : 0.0;
    log_w += dynamics_.step_conditioned(state, band, spec_->dt(n), rng);
    if (!band.contains(state.s)) throw std::logic_error("conditioned path left its band");
    if (kappa_now != 0.0) log_w += kappa_now * log_distance(state.s);
    return log_w;
  }

  /// log|s - K|, floored to keep the potential finite at s == K.
  double log_distance(double s) const {
    const double gap = std::abs(s - spec_->strike);
    const double floor = std::numeric_limits<double>::epsilon() * spec_->strike;
    if (gap < floor) {
      guard_events_->fetch_add(1, std::memory_order_relaxed);
      return std::log(floor);
    }
    return std::log(gap);
  }

  std::size_t guard_events() const { return guard_events_->load(); }
  const PotentialConfig& potential() const { return potential_; }

 private:
  const BarrierSpec* spec_;
  Dynamics dynamics_;
  PotentialConfig potential_;
  std::shared_ptr<std::atomic<std::size_t>> guard_events_;
};

struct GbmDynamics {
  GbmParams params;

  BarrierState initial(const BarrierSpec& spec) const { return {spec.s0, 0.0}; }

  /// Moves to a conditioned draw; returns log of the band probability.
  double step_conditioned(BarrierState& state, const Interval& band, double dt,
                          ParticleRng& rng) const {
    const double survival = gbm_survival_prob(state.s, band, dt, params);
    if (!(survival > 0.0)) return kNegInf;
    state.s = gbm_sample_conditioned(state.s, band, dt, params, rng);
    return std::log(survival);
  }
};

/// BNS variant: the variance block is proposed from its prior, then the price
/// is drawn conditioned on the band given the period's integrated variance.
struct BnsDynamics {
  BnsParams params;

  BarrierState initial(const BarrierSpec& spec) const { return {spec.s0, params.v0}; }

  double step_conditioned(BarrierState& state, const Interval& band, double dt,
                          ParticleRng& rng) const {
    const auto block = bns_sample_vol_block(params, dt, rng);
    const auto vol = bns_advance_vol(VolState{state.sigma_bar, 0.0}, block, params);
    state.sigma_bar = vol.sigma_bar;
    // Lognormal step with log-variance sigma_tilde and log-drift mu*dt.
    GbmParams local;
    local.sigma = std::sqrt(vol.sigma_tilde / dt);
    local.r = params.mu + 0.5 * local.sigma * local.sigma;
    local.s0 = state.s;
    if (!(local.sigma > 0.0)) throw DomainError("BnsDynamics: zero integrated variance");
    const double survival = gbm_survival_prob(state.s, band, dt, local);
    if (!(survival > 0.0)) return kNegInf;
    state.s = gbm_sample_conditioned(state.s, band, dt, local, rng);
    return std::log(survival);
  }
};

struct BarrierRunResult {
  double price = 0.0;
  double z = 0.0;
  double ess_final = 0.0;
  std::size_t resample_count = 0;
  std::vector<double> ess_trace;
  std::size_t guard_events = 0;
};

namespace detail {

template <class Dynamics>
BarrierRunResult run_barrier(const BarrierSpec& spec, Dynamics dynamics, std::size_t n,
                             const ResampleConfig& cfg, const PotentialConfig& potential) {
  spec.validate();
  potential.validate();
  BarrierModel<Dynamics> model(spec, dynamics, potential);
  const auto run = sir_run(model, spec.m(), n, cfg);
  const double kappa_final = potential.kappa_at(spec.m());
  const double strike = spec.strike;
  const double weighted = run.cloud.expectation([&](const BarrierState& x) {
    const double payoff = std::max(x.s - strike, 0.0);
    if (payoff == 0.0 || kappa_final == 0.0) return payoff;
    return payoff * std::exp(-kappa_final * model.log_distance(x.s));
  });
  BarrierRunResult out;
  out.z = estimate_z(run.z);
  out.price = std::exp(-spec.rate * spec.maturity()) * out.z * weighted;
  out.ess_trace = run.trace.ess;
  out.ess_final = run.trace.ess.back();
  out.resample_count = run.trace.resample_steps.size();
  out.guard_events = model.guard_events();
  return out;
}

template <class Fn>
BarrierRunResult dispatch(const PriceModel& model, Fn&& fn) {
  return std::visit(
      [&](const auto& params) -> BarrierRunResult {
        using P = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<P, GbmParams>) {
          return fn(GbmDynamics{params});
        } else {
          return fn(BnsDynamics{params});
        }
      },
      model);
}

}  // namespace detail

/// Conditioned importance sampling without resampling.
inline BarrierRunResult price_barrier_sis(const BarrierSpec& spec, const PriceModel& model,
                                          std::size_t n, std::uint64_t seed) {
  return detail::dispatch(model, [&](auto dyn) {
    return detail::run_barrier(spec, dyn, n, ResampleConfig{ResampleScheme::systematic, 0.0, seed},
                               PotentialConfig{});
  });
}

/// Conditioned importance sampling with ESS-triggered resampling.
inline BarrierRunResult price_barrier_sir(const BarrierSpec& spec, const PriceModel& model,
                                          std::size_t n, const ResampleConfig& cfg) {
  return detail::dispatch(
      model, [&](auto dyn) { return detail::run_barrier(spec, dyn, n, cfg, PotentialConfig{}); });
}

/// As price_barrier_sir with targets tilted by |s_n - K|^{kappa_n}; the
/// estimate divides the payoff by the terminal potential.
inline BarrierRunResult price_barrier_tempered(const BarrierSpec& spec, const PriceModel& model,
                                               std::size_t n, const ResampleConfig& cfg,
                                               const PotentialConfig& potential) {
  return detail::dispatch(
      model, [&](auto dyn) { return detail::run_barrier(spec, dyn, n, cfg, potential); });
}

}  // namespace smcprice
