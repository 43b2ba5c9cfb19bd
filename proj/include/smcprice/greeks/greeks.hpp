#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "smcprice/barrier/barrier_pricer.hpp"
#include "smcprice/core/errors.hpp"
#include "smcprice/core/rng.hpp"
#include "smcprice/models/gbm.hpp"

namespace smcprice {

/**
 * Transition density p_theta(x_n | x_{n-1}) with its analytic theta
 * derivative and a per-date factor phi_n(x_n). `has_derivative(n)` may
 * return false for dates whose transition does not depend on theta, which
 * skips the derivative sum for that date.
 */
template <class M>
concept DifferentiableTransition = requires(const M& m, const typename M::State& x, std::size_t n,
                                            ParticleRng& rng) {
  typename M::State;
  { m.initial_state() } -> std::convertible_to<typename M::State>;
  { m.sample(x, n, rng) } -> std::convertible_to<typename M::State>;
  { m.density(x, x, n) } -> std::convertible_to<double>;
  { m.density_derivative(x, x, n) } -> std::convertible_to<double>;
  { m.potential(x, n) } -> std::convertible_to<double>;
  { m.has_derivative(n) } -> std::convertible_to<bool>;
};

template <class State>
struct SignedCloud {
  std::vector<State> states;
  std::vector<double> lambda_weights;
  std::vector<double> pi_weights;
};

/// Order in which the two sums of a signed-weight update are formed.
enum class AccumulationOrder { lambda_first, derivative_first };

template <class State>
struct GreekRun {
  double estimate = 0.0;  // Lambda_m(1)
  double pi_mass = 0.0;   // Pi_m(1)
  std::vector<double> lambda_trace;
  std::vector<double> pi_trace;
  SignedCloud<State> cloud;
};

namespace detail {

inline double weight_sum(const std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

}  // namespace detail

/**
 * Signed-measure recursion for a likelihood-ratio sensitivity.
 *
 * Date 1 samples from p_theta(. | x_0). Each later date draws from the
 * mixture sum_j |pi_j| p_theta(. | x_j) / sum_j |pi_j| and reweights every
 * new point against the whole previous cloud, at O(N^2) cost per date.
 */
template <DifferentiableTransition Model>
GreekRun<typename Model::State> greek_recursion_run(const Model& model, std::size_t m, std::size_t n,
                                                    std::uint64_t seed,
                                                    AccumulationOrder order = AccumulationOrder::lambda_first) {
  using State = typename Model::State;
  if (m == 0) throw DomainError("greek_recursion_run: need at least one date");
  if (n == 0) throw DomainError("greek_recursion_run: need at least one particle");
  const double nd = static_cast<double>(n);
  GreekRun<State> run;
  auto& cloud = run.cloud;
  cloud.states.resize(n);
  cloud.lambda_weights.assign(n, 0.0);
  cloud.pi_weights.assign(n, 0.0);

  const State x0 = model.initial_state();
  const bool first_derivative = model.has_derivative(1);
  parallel_for(n, [&](std::size_t i) {
    auto rng = ParticleRng::stream(seed, StreamTag::propagate, 1, i);
    const State x = model.sample(x0, 1, rng);
    const double dens = model.density(x, x0, 1);
    if (!(dens > 0.0)) throw DomainError("greek_recursion_run: proposal density vanished at a draw");
    const double phi = model.potential(x, 1);
    const double deriv = first_derivative ? model.density_derivative(x, x0, 1) : 0.0;
    cloud.states[i] = x;
    cloud.lambda_weights[i] = phi * deriv / (nd * dens);
    cloud.pi_weights[i] = phi / nd;
  });
  run.lambda_trace.push_back(detail::weight_sum(cloud.lambda_weights));
  run.pi_trace.push_back(detail::weight_sum(cloud.pi_weights));

  std::vector<State> next(n);
  std::vector<double> next_lambda(n), next_pi(n), cumulative(n);
  for (std::size_t step = 2; step <= m; ++step) {
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      mass += std::abs(cloud.pi_weights[j]);
      cumulative[j] = mass;
    }
    if (!(mass > 0.0)) {
      // Nothing survives; every later measure is zero.
      std::fill(cloud.lambda_weights.begin(), cloud.lambda_weights.end(), 0.0);
      std::fill(cloud.pi_weights.begin(), cloud.pi_weights.end(), 0.0);
      run.lambda_trace.push_back(0.0);
      run.pi_trace.push_back(0.0);
      continue;
    }
    const bool use_derivative = model.has_derivative(step);
    parallel_for(n, [&](std::size_t i) {
      auto rng = ParticleRng::stream(seed, StreamTag::propagate, step, i);
      const double u = rng.uniform() * mass;
      const std::size_t anc = std::min<std::size_t>(
          static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()),
          n - 1);
      const State x = model.sample(cloud.states[anc], step, rng);
      double lambda_part = 0.0, deriv_part = 0.0, pi_part = 0.0, mix = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double dens = model.density(x, cloud.states[j], step);
        lambda_part += cloud.lambda_weights[j] * dens;
        pi_part += cloud.pi_weights[j] * dens;
        mix += std::abs(cloud.pi_weights[j]) * dens;
        if (use_derivative) {
          if constexpr (requires { model.score(x, x, step); })
            deriv_part += cloud.pi_weights[j] * dens * model.score(x, cloud.states[j], step);
          else
            deriv_part += cloud.pi_weights[j] * model.density_derivative(x, cloud.states[j], step);
        }
      }
      if (!(mix > 0.0)) throw DomainError("greek_recursion_run: proposal density vanished at a draw");
      const double psi = mix / mass;
      const double phi = model.potential(x, step);
      const double combined =
          order == AccumulationOrder::lambda_first ? lambda_part + deriv_part : deriv_part + lambda_part;
      next[i] = x;
      next_lambda[i] = phi * combined / (nd * psi);
      next_pi[i] = phi * pi_part / (nd * psi);
    });
    cloud.states.swap(next);
    cloud.lambda_weights.swap(next_lambda);
    cloud.pi_weights.swap(next_pi);
    run.lambda_trace.push_back(detail::weight_sum(cloud.lambda_weights));
    run.pi_trace.push_back(detail::weight_sum(cloud.pi_weights));
  }
  run.estimate = run.lambda_trace.back();
  run.pi_mass = run.pi_trace.back();
  return run;
}

enum class GbmGreek { delta, vega };

struct GbmGreekState {
  double s = 0.0;
  double log_s = 0.0;
};

/**
 * Black-Scholes transitions for the knock-out call: phi_n is the band
 * indicator, times the discounted call payoff at the last date.
 */
class GbmBarrierGreekModel {
 public:
  using State = GbmGreekState;

  GbmBarrierGreekModel(const BarrierSpec& spec, const GbmParams& params, GbmGreek greek)
      : spec_(&spec), params_(params), greek_(greek) {
    spec.validate();
    params.validate();
  }

  State initial_state() const { return {spec_->s0, std::log(spec_->s0)}; }

  bool has_derivative(std::size_t n) const { return greek_ == GbmGreek::vega || n == 1; }

  State sample(const State& prev, std::size_t n, ParticleRng& rng) const {
    const double dt = spec_->dt(n);
    const double ls = prev.log_s + params_.log_drift(dt) + params_.sigma * std::sqrt(dt) * rng.normal();
    return {std::exp(ls), ls};
  }

  double density(const State& next, const State& prev, std::size_t n) const {
    const double dt = spec_->dt(n);
    const double sd = params_.sigma * std::sqrt(dt);
    const double z = (next.log_s - prev.log_s - params_.log_drift(dt)) / sd;
    return std::exp(-0.5 * z * z) / (next.s * sd * std::sqrt(2.0 * M_PI));
  }

  /// d log p / d theta.
  double score(const State& next, const State& prev, std::size_t n) const {
    const double dt = spec_->dt(n);
    const double var = params_.sigma * params_.sigma * dt;
    const double u = next.log_s - prev.log_s - params_.log_drift(dt);
    if (greek_ == GbmGreek::delta) return n == 1 ? u / (var * prev.s) : 0.0;
    const double z = u / std::sqrt(var);
    return -1.0 / params_.sigma - z * (var - u) / (params_.sigma * std::sqrt(var));
  }

  double density_derivative(const State& next, const State& prev, std::size_t n) const {
    return density(next, prev, n) * score(next, prev, n);
  }

  double potential(const State& x, std::size_t n) const {
    if (!spec_->intervals[n - 1].contains(x.s)) return 0.0;
    if (n < spec_->m()) return 1.0;
    return std::exp(-spec_->rate * spec_->maturity()) * std::max(x.s - spec_->strike, 0.0);
  }

 private:
  const BarrierSpec* spec_;
  GbmParams params_;
  GbmGreek greek_;
};

struct GreekEstimate {
  double mean = 0.0;
  double two_sd = 0.0;
  double se = 0.0;
  std::vector<double> reps;
};

inline GreekEstimate summarize_reps(std::vector<double> values) {
  GreekEstimate out;
  const double k = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= k;
  double var = 0.0;
  for (double v : values) var += (v - out.mean) * (v - out.mean);
  var = values.size() > 1 ? var / (k - 1.0) : 0.0;
  out.two_sd = 2.0 * std::sqrt(var);
  out.se = std::sqrt(var / k);
  out.reps = std::move(values);
  return out;
}

struct DeltaVega {
  GreekEstimate delta;
  GreekEstimate vega;
};

/// Delta and vega of the knock-out call over `reps` seeds seed, seed+1, ...
inline DeltaVega barrier_delta_vega(const BarrierSpec& spec, const GbmParams& params, std::size_t n,
                                    std::size_t reps, std::uint64_t seed) {
  if (reps == 0) throw DomainError("barrier_delta_vega: need at least one repetition");
  GbmParams p = params;
  p.s0 = spec.s0;
  const GbmBarrierGreekModel delta_model(spec, p, GbmGreek::delta);
  const GbmBarrierGreekModel vega_model(spec, p, GbmGreek::vega);
  std::vector<double> deltas, vegas;
  for (std::size_t r = 0; r < reps; ++r) {
    deltas.push_back(greek_recursion_run(delta_model, spec.m(), n, seed + r).estimate);
    vegas.push_back(greek_recursion_run(vega_model, spec.m(), n, seed + r).estimate);
  }
  return {summarize_reps(std::move(deltas)), summarize_reps(std::move(vegas))};
}

/// Central difference (f(theta + h) - f(theta - h)) / 2h; `f` must reuse its
/// random numbers across calls.
template <class F>
double finite_difference_greek(F&& f, double theta, double h) {
  if (!(h > 0.0)) throw DomainError("finite_difference_greek: step must be positive");
  return (f(theta + h) - f(theta - h)) / (2.0 * h);
}

/// Common-random-number central difference of the SIS knock-out price in s0.
inline double barrier_fd_delta(const BarrierSpec& spec, const GbmParams& params, std::size_t n,
                               std::uint64_t seed, double rel_step = 0.01) {
  auto price = [&](double s0) {
    BarrierSpec shifted = spec;
    shifted.s0 = s0;
    GbmParams p = params;
    p.s0 = s0;
    return price_barrier_sis(shifted, p, n, seed).price;
  };
  return finite_difference_greek(price, spec.s0, rel_step * spec.s0);
}

}  // namespace smcprice
