#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "smcprice/core/errors.hpp"
#include "smcprice/core/rng.hpp"
#include "smcprice/models/normal.hpp"

namespace smcprice {

/// Black-Scholes dynamics under the risk-neutral measure.
struct GbmParams {
  double r = 0.0;
  double sigma = 0.0;
  double s0 = 0.0;

  void validate() const {
    if (!(sigma > 0.0)) throw DomainError("GbmParams: sigma must be positive");
    if (!(s0 > 0.0)) throw DomainError("GbmParams: s0 must be positive");
  }

  double log_drift(double dt) const { return (r - 0.5 * sigma * sigma) * dt; }
};

/// Admissible price band [lower, upper] for one monitoring date.
struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double s) const noexcept { return s >= lower && s <= upper; }
};

/// Log of the lognormal transition density of S_{t+dt} given S_t = s_prev.
inline double gbm_log_transition(double s_next, double s_prev, double dt, const GbmParams& p) {
  if (!(s_next > 0.0) || !(s_prev > 0.0) || !(dt > 0.0))
    throw DomainError("gbm_log_transition: prices and dt must be positive");
  const double sd = p.sigma * std::sqrt(dt);
  const double ls = std::log(s_next);
  const double z = (ls - std::log(s_prev) - p.log_drift(dt)) / sd;
  return normal_log_pdf(z) - std::log(sd) - ls;
}

namespace detail {

struct StandardizedBand {
  double alpha;  // lower bound of the standard normal driver
  double beta;   // upper bound
  double mean;   // mean of log S_{t+dt}
  double sd;
};

inline StandardizedBand standardize(double s_prev, const Interval& band, double dt,
                                    const GbmParams& p) {
  StandardizedBand b{};
  b.mean = std::log(s_prev) + p.log_drift(dt);
  b.sd = p.sigma * std::sqrt(dt);
  constexpr double inf = std::numeric_limits<double>::infinity();
  b.alpha = band.lower > 0.0 ? (std::log(band.lower) - b.mean) / b.sd : -inf;
  b.beta = band.upper < inf ? (band.upper > 0.0 ? (std::log(band.upper) - b.mean) / b.sd : -inf)
                            : inf;
  return b;
}

/// P(alpha <= Z <= beta) without cancellation in either tail.
inline double band_mass(double alpha, double beta) {
  if (alpha > 0.0) return normal_sf(alpha) - normal_sf(beta);
  return normal_cdf(beta) - normal_cdf(alpha);
}

}  // namespace detail

/// Probability that the next price lands in `band`.
inline double gbm_survival_prob(double s_prev, const Interval& band, double dt,
                                const GbmParams& p) {
  if (!(band.lower < band.upper)) throw DomainError("gbm_survival_prob: empty interval");
  const auto b = detail::standardize(s_prev, band, dt, p);
  return std::clamp(detail::band_mass(b.alpha, b.beta), 0.0, 1.0);
}

/// Unconditioned one-step draw.
inline double gbm_sample(double s_prev, double dt, const GbmParams& p, ParticleRng& rng) {
  return s_prev * std::exp(p.log_drift(dt) + p.sigma * std::sqrt(dt) * rng.normal());
}

/// Exact draw from the transition law truncated to `band` (inverse CDF).
inline double gbm_sample_conditioned(double s_prev, const Interval& band, double dt,
                                     const GbmParams& p, ParticleRng& rng) {
  const auto b = detail::standardize(s_prev, band, dt, p);
  const double u = rng.uniform_open();
  double z;
  if (b.alpha > 0.0) {
    const double q_hi = normal_sf(b.alpha);
    const double q_lo = normal_sf(b.beta);
    if (!(q_hi > q_lo)) throw DomainError("gbm_sample_conditioned: zero survival probability");
    z = normal_isf(q_lo + u * (q_hi - q_lo));
  } else {
    const double lo = normal_cdf(b.alpha);
    const double hi = normal_cdf(b.beta);
    if (!(hi > lo)) throw DomainError("gbm_sample_conditioned: zero survival probability");
    z = normal_quantile(lo + u * (hi - lo));
  }
  z = std::clamp(z, b.alpha, b.beta);
  const double s = std::exp(b.mean + b.sd * z);
  return std::clamp(s, std::max(band.lower, 0.0), band.upper);
}

/// Black-Scholes call price.
inline double bs_call_price(double s0, double strike, double r, double sigma, double maturity) {
  if (!(strike > 0.0)) return s0;
  const double vol = sigma * std::sqrt(maturity);
  const double d1 = (std::log(s0 / strike) + (r + 0.5 * sigma * sigma) * maturity) / vol;
  return s0 * normal_cdf(d1) - strike * std::exp(-r * maturity) * normal_cdf(d1 - vol);
}

inline double bs_call_delta(double s0, double strike, double r, double sigma, double maturity) {
  const double vol = sigma * std::sqrt(maturity);
  const double d1 = (std::log(s0 / strike) + (r + 0.5 * sigma * sigma) * maturity) / vol;
  return normal_cdf(d1);
}

/// Continuously monitored down-and-out call (no dividends).
inline double down_and_out_call_continuous(double s0, double strike, double barrier, double r,
                                           double sigma, double maturity) {
  if (!(barrier > 0.0)) return bs_call_price(s0, strike, r, sigma, maturity);
  if (barrier >= s0) return 0.0;
  const double vol = sigma * std::sqrt(maturity);
  const double lam = (r + 0.5 * sigma * sigma) / (sigma * sigma);
  const double ratio = barrier / s0;
  const double disc = std::exp(-r * maturity);
  if (barrier <= strike) {
    const double y = std::log(barrier * barrier / (s0 * strike)) / vol + lam * vol;
    const double down_in = s0 * std::pow(ratio, 2.0 * lam) * normal_cdf(y) -
                           strike * disc * std::pow(ratio, 2.0 * lam - 2.0) * normal_cdf(y - vol);
    return bs_call_price(s0, strike, r, sigma, maturity) - down_in;
  }
  const double x1 = std::log(s0 / barrier) / vol + lam * vol;
  const double y1 = std::log(barrier / s0) / vol + lam * vol;
  return s0 * normal_cdf(x1) - strike * disc * normal_cdf(x1 - vol) -
         s0 * std::pow(ratio, 2.0 * lam) * normal_cdf(y1) +
         strike * disc * std::pow(ratio, 2.0 * lam - 2.0) * normal_cdf(y1 - vol);
}

/// Continuity-correction constant for discretely monitored barriers.
inline constexpr double kBarrierShiftBeta = 0.5826;

/**
 * Discretely monitored down-and-out call via the continuity correction:
 * the continuous-barrier price evaluated at barrier * exp(-beta sigma sqrt(dt)).
 */
inline double bgk_barrier_price(const GbmParams& p, double barrier, double strike, std::size_t m,
                                double dt) {
  if (barrier >= p.s0) throw DomainError("bgk_barrier_price: barrier at or above spot");
  const double shifted = barrier * std::exp(-kBarrierShiftBeta * p.sigma * std::sqrt(dt));
  return down_and_out_call_continuous(p.s0, strike, shifted, p.r, p.sigma,
                                      static_cast<double>(m) * dt);
}

}  // namespace smcprice
