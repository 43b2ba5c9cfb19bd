#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "smcprice/asian/asian_model.hpp"
#include "smcprice/core/rng.hpp"

namespace smcprice {

struct IsBaselineConfig {
  std::size_t max_bisection_steps = 300;
  /// Grid points used to detect more than one root of the drift equation.
  std::size_t root_scan_points = 64;
  bool force_zero_shift = false;
};

struct AsianIsResult {
  double price = 0.0;
  double se = 0.0;
  double nonunique_fraction = 0.0;
  double fallback_fraction = 0.0;
};

/// Drift shift theta for one path given per-period scales s_j.
struct DriftShift {
  std::vector<double> theta;
  bool unique = true;
  bool fallback = false;
};

/**
 * Solves the first-order condition of max_z log(A(z) - K) - |z|^2 / 2 for the
 * log-price increments S_j = S_{j-1} exp(mu dt + s_j z_j), where A is the
 * arithmetic average. Writing y = A - K, the optimum satisfies
 *   z_1 = s_1 (y + K) / y,   z_{j+1} / s_{j+1} = z_j / s_j - S_j / (m y),
 * so a single scalar equation f(y) = A(z(y)) - K - y = 0 is solved by
 * bisection. A zero scale gives z_j = 0 for that period.
 */
inline DriftShift solve_drift_shift(const std::vector<double>& scales, const AsianSpec& spec,
                                    const IsBaselineConfig& cfg) {
  const std::size_t m = spec.m;
  const double md = static_cast<double>(m);
  DriftShift out;
  out.theta.assign(m, 0.0);

  auto path_for = [&](double y, std::vector<double>* z_out) {
    double s = spec.params.s0;
    double sum = 0.0;
    double ratio = (y + spec.strike) / y;  // z_j / s_j
    for (std::size_t j = 0; j < m; ++j) {
      const double z = scales[j] * ratio;
      if (z_out) (*z_out)[j] = z;
      s *= std::exp(spec.params.mu * spec.dt + scales[j] * z);
      sum += s;
      ratio -= s / (md * y);
    }
    return sum / md;
  };
  auto f = [&](double y) {
    const double avg = path_for(y, nullptr);
    return std::isfinite(avg) ? avg - spec.strike - y : std::numeric_limits<double>::infinity();
  };

  // Bracket on a log grid; f > 0 near 0 and f < 0 for large y.
  const double lo_end = 1e-8 * (spec.strike + spec.params.s0);
  const double hi_end = 1e8 * (spec.strike + spec.params.s0);
  const std::size_t pts = std::max<std::size_t>(cfg.root_scan_points, 2);
  std::size_t sign_changes = 0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  double prev_y = lo_end, prev_f = f(lo_end);
  for (std::size_t k = 1; k < pts; ++k) {
    const double y = lo_end * std::pow(hi_end / lo_end, static_cast<double>(k) / static_cast<double>(pts - 1));
    const double fy = f(y);
    if ((prev_f > 0.0) != (fy > 0.0)) {
      if (sign_changes == 0) {
        bracket_lo = prev_y;
        bracket_hi = y;
      }
      ++sign_changes;
    }
    prev_y = y;
    prev_f = fy;
  }
  if (sign_changes == 0) {
    out.fallback = true;
    out.unique = false;
    return out;
  }
  out.unique = sign_changes == 1;
  const bool lo_positive = f(bracket_lo) > 0.0;
  for (std::size_t it = 0; it < cfg.max_bisection_steps; ++it) {
    const double mid = 0.5 * (bracket_lo + bracket_hi);
    if (mid <= bracket_lo || mid >= bracket_hi) break;
    if ((f(mid) > 0.0) == lo_positive)
      bracket_lo = mid;
    else
      bracket_hi = mid;
  }
  path_for(0.5 * (bracket_lo + bracket_hi), &out.theta);
  return out;
}

/**
 * Drift-shift importance sampling: exact variance blocks, Gaussian drivers
 * shifted by theta chosen from per-period scales sqrt(lambda dt v_min), where
 * v_min is the smallest instantaneous variance level over the period.
 */
inline AsianIsResult price_asian_is(const AsianSpec& spec, std::size_t n, std::uint64_t seed,
                                    const IsBaselineConfig& cfg = {}) {
  spec.validate();
  const std::size_t m = spec.m;
  std::vector<double> values(n);
  std::vector<unsigned char> nonunique(n, 0), fallback(n, 0);
  parallel_for(n, [&](std::size_t i) {
    auto rng = ParticleRng::stream(seed, StreamTag::propagate, 0, i);
    std::vector<BnsVolBlock> blocks(m);
    std::vector<double> sd(m), scales(m);
    VolState vol{spec.params.v0, 0.0};
    for (std::size_t j = 0; j < m; ++j) {
      blocks[j] = bns_sample_vol_block(spec.params, spec.dt, rng);
      const double lowest = bns_min_variance_level(vol.sigma_bar, blocks[j], spec.params);
      scales[j] = std::sqrt(std::max(0.0, spec.params.lambda * spec.dt * lowest));
      vol = bns_advance_vol(vol, blocks[j], spec.params);
      sd[j] = std::sqrt(std::max(0.0, vol.sigma_tilde));
    }
    DriftShift shift;
    shift.theta.assign(m, 0.0);
    if (!cfg.force_zero_shift) shift = solve_drift_shift(scales, spec, cfg);
    nonunique[i] = shift.unique ? 0 : 1;
    fallback[i] = shift.fallback ? 1 : 0;

    double s = spec.params.s0, sum = 0.0, log_lr = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double z = shift.theta[j] + rng.normal();
      log_lr += -shift.theta[j] * z + 0.5 * shift.theta[j] * shift.theta[j];
      s *= std::exp(spec.params.mu * spec.dt + sd[j] * z);
      sum += s;
    }
    const double payoff = std::max(sum / static_cast<double>(m) - spec.strike, 0.0);
    values[i] = payoff > 0.0 ? payoff * std::exp(log_lr) : 0.0;
  });

  const double disc = std::exp(-spec.rate * spec.maturity());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n > 1 ? n - 1 : 1);
  AsianIsResult out;
  out.price = disc * mean;
  out.se = disc * std::sqrt(var / static_cast<double>(n));
  double nu = 0.0, fb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    nu += nonunique[i];
    fb += fallback[i];
  }
  out.nonunique_fraction = nu / static_cast<double>(n);
  out.fallback_fraction = fb / static_cast<double>(n);
  return out;
}

}  // namespace smcprice
