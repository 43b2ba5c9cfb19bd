#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "smcprice/core/errors.hpp"
#include "smcprice/core/rng.hpp"
#include "smcprice/core/weights.hpp"
#include "smcprice/models/normal.hpp"

namespace smcprice {

/**
 * Barndorff-Nielsen--Shephard model with a gamma-OU variance process.
 *
 * The log-price has drift `mu`; the variance follows an OU process with decay
 * `lambda` driven by a compound-Poisson subordinator whose jumps are
 * represented, period by period, as points of a unit-rate Poisson process on
 * [0, lambda*nu*dt] x [0, 1].
 */
struct BnsParams {
  double mu = 0.0;
  double lambda = 1.0;
  double nu = 0.5;
  /// Initial variance level sigma_bar_0.
  double v0 = 0.5;
  double s0 = 1.0;

  void validate() const {
    if (!(lambda > 0.0)) throw DomainError("BnsParams: lambda must be positive");
    if (!(nu > 0.0)) throw DomainError("BnsParams: nu must be positive");
    if (!(v0 >= 0.0)) throw DomainError("BnsParams: v0 must be nonnegative");
    if (!(s0 > 0.0)) throw DomainError("BnsParams: s0 must be positive");
  }

  /// Side length lambda*nu*dt of the point-process domain.
  double block_extent(double dt) const { return lambda * nu * dt; }
};

/// Poisson points (a_j, r_j) driving one period's variance path.
struct BnsVolBlock {
  std::vector<double> a;
  std::vector<double> r_times;
  double delta = 0.0;

  std::size_t n() const noexcept { return a.size(); }
};

struct VolState {
  double sigma_bar = 0.0;    // variance level at the end of the period
  double sigma_tilde = 0.0;  // integrated variance over the period
};

inline void check_block(const BnsVolBlock& block, const BnsParams& p) {
  if (block.a.size() != block.r_times.size())
    throw DomainError("BnsVolBlock: a and r_times lengths differ");
  if (!(block.delta > 0.0)) throw DomainError("BnsVolBlock: delta must be positive");
  const double extent = p.block_extent(block.delta);
  for (std::size_t j = 0; j < block.n(); ++j) {
    if (!(block.a[j] > 0.0)) throw DomainError("BnsVolBlock: a_j must be positive");
    if (block.a[j] > extent) throw DomainError("BnsVolBlock: a_j exceeds lambda*nu*dt");
    if (block.r_times[j] < 0.0 || block.r_times[j] > 1.0)
      throw DomainError("BnsVolBlock: r_j outside [0,1]");
  }
}

/// Draws n ~ Poisson(lambda nu dt), a_j ~ U(0, lambda nu dt], r_j ~ U[0, 1).
inline BnsVolBlock bns_sample_vol_block(const BnsParams& p, double dt, ParticleRng& rng) {
  if (!(dt > 0.0)) throw DomainError("bns_sample_vol_block: dt must be positive");
  const double extent = p.block_extent(dt);
  BnsVolBlock block;
  block.delta = dt;
  const std::uint32_t count = rng.poisson(extent);
  block.a.resize(count);
  block.r_times.resize(count);
  for (std::uint32_t j = 0; j < count; ++j) {
    block.a[j] = extent * rng.uniform_pos();
    block.r_times[j] = rng.uniform();
  }
  return block;
}

/// Log-density of a block under the unit-rate Poisson prior, with respect to
/// counting measure on n times Lebesgue measure on ordered point tuples.
inline double bns_block_log_prior(const BnsVolBlock& block, const BnsParams& p) {
  return -p.block_extent(block.delta) - std::lgamma(static_cast<double>(block.n()) + 1.0);
}

/**
 * One period of the variance recursion:
 *   g1 = e^{-l D} sum_j log(l nu D / a_j) e^{l D r_j},  g2 = sum_j log(l nu D / a_j),
 *   sigma_bar = e^{-l D} sigma_bar_prev + g1,
 *   sigma_tilde = g2 - sigma_bar + sigma_bar_prev.
 */
inline VolState bns_advance_vol(const VolState& prev, const BnsVolBlock& block,
                                const BnsParams& p) {
  const double decay = std::exp(-p.lambda * block.delta);
  const double extent = p.block_extent(block.delta);
  double g1 = 0.0;
  double g2 = 0.0;
  for (std::size_t j = 0; j < block.n(); ++j) {
    if (!(block.a[j] > 0.0)) throw DomainError("bns_advance_vol: a_j must be positive");
    const double jump = std::log(extent / block.a[j]);
    g1 += jump * std::exp(p.lambda * block.delta * block.r_times[j]);
    g2 += jump;
  }
  g1 *= decay;
  VolState next;
  next.sigma_bar = decay * prev.sigma_bar + g1;
  next.sigma_tilde = g2 - next.sigma_bar + prev.sigma_bar;
  return next;
}

/**
 * Smallest instantaneous variance level over the period.
 *
 * Between points the level decays as e^{-lambda t}; each point at time
 * r_j * delta adds log(lambda nu delta / a_j). The minimum is attained either
 * just before a jump or at the period end.
 */
inline double bns_min_variance_level(double prev_sigma_bar, const BnsVolBlock& block,
                                     const BnsParams& p) {
  const double extent = p.block_extent(block.delta);
  auto level_at = [&](double t, bool include_jumps_at_t) {
    double level = prev_sigma_bar * std::exp(-p.lambda * t);
    for (std::size_t j = 0; j < block.n(); ++j) {
      const double tj = block.r_times[j] * block.delta;
      if (tj < t || (include_jumps_at_t && tj == t))
        level += std::log(extent / block.a[j]) * std::exp(-p.lambda * (t - tj));
    }
    return level;
  };
  double lowest = level_at(block.delta, true);
  for (double r : block.r_times) lowest = std::min(lowest, level_at(r * block.delta, false));
  return lowest;
}

/// Normal log-density of the period log-return with variance sigma_tilde.
inline double bns_logprice_log_transition(double y_next, double y_prev, double sigma_tilde,
                                          double mu, double dt) {
  if (!(sigma_tilde > 0.0))
    throw DomainError("bns_logprice_log_transition: integrated variance must be positive");
  const double d = y_next - y_prev - mu * dt;
  return -0.5 * d * d / sigma_tilde - 0.5 * std::log(sigma_tilde) - kLogSqrt2Pi;
}

/**
 * Shifted lognormal density of a cumulative sum: nu_i - nu_prev is lognormal
 * with location log(nu_prev - nu_prev2) + mu dt and log-variance sigma_tilde.
 * Returns -inf instead of throwing when the ordering is violated.
 */
inline double shifted_lognormal_logpdf_unchecked(double nu_i, double nu_prev, double nu_prev2,
                                                 double sigma_tilde, double mu, double dt) {
  const double step = nu_i - nu_prev;
  const double prev_step = nu_prev - nu_prev2;
  if (!(step > 0.0) || !(prev_step > 0.0) || !(sigma_tilde > 0.0)) return kNegInf;
  const double log_step = std::log(step);
  const double d = log_step - std::log(prev_step) - mu * dt;
  return -0.5 * d * d / sigma_tilde - 0.5 * std::log(sigma_tilde) - kLogSqrt2Pi - log_step;
}

inline double shifted_lognormal_logpdf(double nu_i, double nu_prev, double nu_prev2,
                                       double sigma_tilde, double mu, double dt) {
  if (!(nu_i > nu_prev) || !(nu_prev > nu_prev2))
    throw DomainError("shifted_lognormal_logpdf: cumulative sums must be strictly increasing");
  if (!(sigma_tilde > 0.0))
    throw DomainError("shifted_lognormal_logpdf: integrated variance must be positive");
  return shifted_lognormal_logpdf_unchecked(nu_i, nu_prev, nu_prev2, sigma_tilde, mu, dt);
}

}  // namespace smcprice
