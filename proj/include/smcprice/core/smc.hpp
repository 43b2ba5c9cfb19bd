#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "smcprice/core/errors.hpp"
#include "smcprice/core/resample.hpp"
#include "smcprice/core/rng.hpp"
#include "smcprice/core/weights.hpp"

namespace smcprice {

template <class State>
struct ParticleCloud {
  std::vector<State> states;
  std::vector<double> log_weights;
  std::vector<std::size_t> ancestors;
  std::size_t step = 0;

  std::size_t size() const noexcept { return states.size(); }

  std::vector<double> normalized_weights() const {
    return normalize_weights(log_weights, step).weights;
  }

  /// Self-normalized estimate of the current target's expectation of h.
  template <class Fn>
  double expectation(Fn&& h) const {
    const auto w = normalized_weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i)
      if (w[i] > 0.0) acc += w[i] * h(states[i]);
    return acc;
  }
};

/**
 * Normalizing-constant bookkeeping.
 *
 * Each particle carries the log-product of its incremental weights since the
 * last resampling time. Resampling closes the epoch and records
 * log((1/N) sum_i product_i). Time 0 belongs to the first epoch.
 */
struct ZEstimatorState {
  std::vector<double> epoch_log_products;
  std::vector<double> completed_epoch_log_means;

  void reset(std::size_t n) {
    epoch_log_products.assign(n, 0.0);
    completed_epoch_log_means.clear();
  }

  double open_epoch_log_mean() const {
    return log_sum_exp(epoch_log_products) - std::log(static_cast<double>(epoch_log_products.size()));
  }

  void close_epoch() {
    completed_epoch_log_means.push_back(open_epoch_log_mean());
    std::fill(epoch_log_products.begin(), epoch_log_products.end(), 0.0);
  }
};

inline double log_estimate_z(const ZEstimatorState& z) {
  double acc = 0.0;
  for (double v : z.completed_epoch_log_means) acc += v;
  return acc + z.open_epoch_log_mean();
}

inline double estimate_z(const ZEstimatorState& z) { return std::exp(log_estimate_z(z)); }

struct RunTrace {
  /// ESS after weighting at each step, before any resampling.
  std::vector<double> ess;
  /// Steps at which the cloud was resampled.
  std::vector<std::size_t> resample_steps;
};

template <class State>
struct SmcRun {
  ParticleCloud<State> cloud;
  ZEstimatorState z;
  RunTrace trace;
};

/**
 * A sequential importance model: an initial law with weight W_0 and a
 * proposal-plus-incremental-weight for every later step. `advance` moves a
 * path-state from step n-1 to n in place and returns log W_n.
 */
template <class M>
concept SequentialModel = requires(const M& model, typename M::State& state, std::size_t n,
                                   ParticleRng& rng) {
  typename M::State;
  { model.initial(rng) } -> std::convertible_to<typename M::State>;
  { model.initial_log_weight(std::as_const(state), rng) } -> std::convertible_to<double>;
  { model.advance(state, n, rng) } -> std::convertible_to<double>;
};

/// Incremental weight callable (prev, next, step, rng) -> nonnegative real.
/// A randomized weight must be unbiased for the true weight given (prev, next).
template <class Fn>
struct IncrementalWeightFn {
  Fn fn;
  bool randomized = false;
};

template <class Fn>
IncrementalWeightFn(Fn, bool) -> IncrementalWeightFn<Fn>;

/// Builds a SequentialModel from separate initial sampler, proposal kernel and
/// weight functions.
template <class StateT, class Init, class InitWeight, class Proposal, class Weight>
struct KernelModel {
  using State = StateT;
  Init init;
  InitWeight init_weight;
  Proposal proposal;
  IncrementalWeightFn<Weight> weight;

  State initial(ParticleRng& rng) const { return init(rng); }
  double initial_log_weight(const State& s, ParticleRng& rng) const {
    return std::log(init_weight(s, rng));
  }
  double advance(State& s, std::size_t n, ParticleRng& rng) const {
    State next = proposal(std::as_const(s), n, rng);
    const double w = weight.fn(std::as_const(s), std::as_const(next), n, rng);
    s = std::move(next);
    return std::log(w);
  }
};

namespace detail {

template <class State>
void apply_ancestors(SmcRun<State>& run, const std::vector<std::size_t>& idx) {
  std::vector<State> next;
  next.reserve(idx.size());
  for (std::size_t a : idx) next.push_back(run.cloud.states[a]);
  run.cloud.states = std::move(next);
  run.cloud.ancestors = idx;
  const double uniform = -std::log(static_cast<double>(idx.size()));
  std::fill(run.cloud.log_weights.begin(), run.cloud.log_weights.end(), uniform);
}

/// Records ESS and resamples if it falls strictly below the threshold.
template <class State>
void maybe_resample(SmcRun<State>& run, const ResampleConfig& cfg, std::size_t step,
                    bool allow) {
  const double e = ess(run.cloud.log_weights, step);
  run.trace.ess.push_back(e);
  if (!allow || !(e < cfg.ess_threshold)) return;
  run.z.close_epoch();
  auto rng = ParticleRng::stream(cfg.rng_seed, StreamTag::resample, step, 0);
  const auto idx = resample_indices(run.cloud.log_weights, cfg.scheme, rng, step);
  apply_ancestors(run, idx);
  run.trace.resample_steps.push_back(step);
}

template <class State>
void add_increments(SmcRun<State>& run, const std::vector<double>& log_increments,
                    std::size_t step) {
  bool alive = false;
  for (std::size_t i = 0; i < log_increments.size(); ++i) {
    run.cloud.log_weights[i] += log_increments[i];
    run.z.epoch_log_products[i] += log_increments[i];
    alive = alive || std::isfinite(run.cloud.log_weights[i]);
  }
  if (!alive) throw DegenerateCloudError(step);
}

}  // namespace detail

/**
 * Sequential importance sampling with optional ESS-triggered resampling.
 *
 * Steps 0..n_steps are weighted; the resampling decision follows the
 * weighting of every step except the last, so the returned cloud carries the
 * terminal importance weights.
 */
template <SequentialModel Model>
SmcRun<typename Model::State> sir_run(const Model& model, std::size_t n_steps, std::size_t n,
                                      const ResampleConfig& cfg) {
  using State = typename Model::State;
  if (n == 0) throw DomainError("sir_run: need at least one particle");
  if (!(cfg.ess_threshold >= 0.0) || cfg.ess_threshold > static_cast<double>(n))
    throw DomainError("sir_run: ess_threshold must lie in [0, N]");
  SmcRun<State> run;
  run.cloud.states.resize(n);
  run.cloud.log_weights.assign(n, 0.0);
  run.cloud.ancestors.resize(n);
  std::iota(run.cloud.ancestors.begin(), run.cloud.ancestors.end(), std::size_t{0});
  run.z.reset(n);

  std::vector<double> inc(n);
  parallel_for(n, [&](std::size_t i) {
    auto rng = ParticleRng::stream(cfg.rng_seed, StreamTag::init, 0, i);
    run.cloud.states[i] = model.initial(rng);
    inc[i] = model.initial_log_weight(run.cloud.states[i], rng);
  });
  detail::add_increments(run, inc, 0);
  detail::maybe_resample(run, cfg, 0, n_steps > 0);

  for (std::size_t step = 1; step <= n_steps; ++step) {
    run.cloud.step = step;
    parallel_for(n, [&](std::size_t i) {
      auto rng = ParticleRng::stream(cfg.rng_seed, StreamTag::propagate, step, i);
      inc[i] = model.advance(run.cloud.states[i], step, rng);
    });
    if (run.trace.resample_steps.empty() || run.trace.resample_steps.back() != step - 1)
      std::iota(run.cloud.ancestors.begin(), run.cloud.ancestors.end(), std::size_t{0});
    detail::add_increments(run, inc, step);
    detail::maybe_resample(run, cfg, step, step < n_steps);
  }
  return run;
}

/// Plain SIS: sir_run with resampling disabled.
template <SequentialModel Model>
SmcRun<typename Model::State> sis_run(const Model& model, std::size_t n_steps, std::size_t n,
                                      std::uint64_t seed) {
  return sir_run(model, n_steps, n, ResampleConfig{ResampleScheme::systematic, 0.0, seed});
}

/**
 * SMC sampler on a common state space, continuing an existing run.
 *
 * For k = 1..n_targets every particle is reweighted by
 * pi_k(x) / pi_{k-1}(x) (the weight obtained with the time-reversal backward
 * kernel), the cloud is resampled if ESS drops below the threshold, and each
 * particle is then moved by the pi_k-invariant kernel `mutate(state, k, rng)`.
 * `log_target(state, k)` is log pi_k up to a constant, k = 0..n_targets.
 */
template <class State, class LogTarget, class Mutate>
void smc_sampler_run(SmcRun<State>& run, std::size_t n_targets, LogTarget&& log_target,
                     Mutate&& mutate, const ResampleConfig& cfg) {
  const std::size_t n = run.cloud.size();
  std::vector<double> inc(n);
  const std::size_t base = run.cloud.step;
  for (std::size_t k = 1; k <= n_targets; ++k) {
    const std::size_t step = base + k;
    run.cloud.step = step;
    parallel_for(n, [&](std::size_t i) {
      const double now = log_target(std::as_const(run.cloud.states[i]), k);
      const double before = log_target(std::as_const(run.cloud.states[i]), k - 1);
      inc[i] = (now == kNegInf || before == kNegInf) ? kNegInf : now - before;
    });
    std::iota(run.cloud.ancestors.begin(), run.cloud.ancestors.end(), std::size_t{0});
    detail::add_increments(run, inc, step);
    detail::maybe_resample(run, cfg, step, true);
    parallel_for(n, [&](std::size_t i) {
      auto rng = ParticleRng::stream(cfg.rng_seed, StreamTag::mutate, step, i);
      mutate(run.cloud.states[i], k, rng);
    });
  }
}

}  // namespace smcprice
