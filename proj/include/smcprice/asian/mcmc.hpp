#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "smcprice/asian/asian_model.hpp"

namespace smcprice {

/// Which proposal-ratio factor the birth/death move uses.
enum class BirthDeathRatio {
  /// extent * d(n+1) / (b(n) (n+1)): reversible for the Poisson block prior.
  corrected,
  /// extent * d(n+1) / b(n), without the 1/(n+1) term.
  verbatim,
};

struct McmcConfig {
  std::size_t sweeps = 2;
  BirthDeathRatio ratio = BirthDeathRatio::corrected;
};

/// Thread-safe acceptance counters.
struct MoveCounters {
  std::atomic<std::uint64_t> price_proposed{0};
  std::atomic<std::uint64_t> price_accepted{0};
  std::atomic<std::uint64_t> birth_death_proposed{0};
  std::atomic<std::uint64_t> birth_death_accepted{0};

  static double rate(std::uint64_t acc, std::uint64_t prop) {
    return prop == 0 ? 0.0 : static_cast<double>(acc) / static_cast<double>(prop);
  }
  double price_rate() const { return rate(price_accepted.load(), price_proposed.load()); }
  double birth_death_rate() const {
    return rate(birth_death_accepted.load(), birth_death_proposed.load());
  }
};

inline double birth_prob(std::size_t n) { return n == 0 ? 1.0 : 0.5; }
inline double death_prob(std::size_t n) { return n == 0 ? 0.0 : 0.5; }

/// Sum of log phi_j for j in [from, to]; -inf as soon as one term is.
inline double asian_period_logpdf_sum(const AsianState& x, const AsianSpec& spec, std::size_t from,
                                      std::size_t to) {
  double acc = 0.0;
  for (std::size_t j = from; j <= to; ++j) {
    const double term = asian_period_logpdf(x, spec, j);
    if (term == kNegInf) return kNegInf;
    acc += term;
  }
  return acc;
}

/**
 * Independence Metropolis-Hastings update of nu_i.
 *
 * The proposal is nu_i's own process density given nu_{i-1}, nu_{i-2}, so
 * the acceptance ratio involves only the two downstream period densities
 * and, for i = m, the potential.
 */
inline bool mcmc_price_move(AsianState& x, std::size_t i, double kappa, const AsianSpec& spec,
                            ParticleRng& rng) {
  const std::size_t m = spec.m;
  const std::size_t last = std::min(m, i + 2);
  const long j = static_cast<long>(i);
  const double base = nu_at(x, spec, j - 1);
  const double prev_step = base - nu_at(x, spec, j - 2);
  const double sd = std::sqrt(x.vols[i - 1].sigma_tilde);
  const double proposal = base + prev_step * std::exp(spec.params.mu * spec.dt + sd * rng.normal());
  const double log_u = std::log(rng.uniform_pos());

  double old_terms = i < m ? asian_period_logpdf_sum(x, spec, i + 1, last) : 0.0;
  if (i == m) old_terms += asian_log_potential(x, spec, m, kappa);
  const double current = x.nu[i - 1];
  x.nu[i - 1] = proposal;
  double new_terms = i < m ? asian_period_logpdf_sum(x, spec, i + 1, last) : 0.0;
  if (i == m) new_terms += asian_log_potential(x, spec, m, kappa);

  const bool accept = new_terms != kNegInf && (old_terms == kNegInf || log_u < new_terms - old_terms);
  if (!accept) x.nu[i - 1] = current;
  return accept;
}

namespace detail {

/// d_j^2 = (log(step_j / step_{j-1}) - mu dt)^2 for periods 1..m, NaN off the
/// support. Birth/death moves leave nu alone, so one pass can share these.
inline void squared_log_residuals(const AsianState& x, const AsianSpec& spec, std::vector<double>& out) {
  out.resize(spec.m);
  for (std::size_t j = 1; j <= spec.m; ++j) {
    const long k = static_cast<long>(j);
    const double step = nu_at(x, spec, k) - nu_at(x, spec, k - 1);
    const double prev_step = nu_at(x, spec, k - 1) - nu_at(x, spec, k - 2);
    if (!(step > 0.0) || !(prev_step > 0.0)) {
      out[j - 1] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double d = std::log(step / prev_step) - spec.params.mu * spec.dt;
    out[j - 1] = d * d;
  }
}

/// Log acceptance ratio for adding (birth) or removing (death) the single
/// point (a, r) of block i. A point adds log(extent / a) e^{-lD(1-r)} to the
/// block's end level and log(extent / a) to its integrated variance before
/// the level correction; later periods see only the carried-over level.
inline double point_log_ratio(const AsianState& x, std::size_t i, double a, double r, bool birth,
                              const AsianSpec& spec, BirthDeathRatio kind, const std::vector<double>& dsq) {
  const auto& p = spec.params;
  const double decay = std::exp(-p.lambda * spec.dt);
  const double extent = p.block_extent(spec.dt);
  if (!(a > 0.0)) throw DomainError("birth_death_log_ratio: a_j must be positive");
  const double sign = birth ? 1.0 : -1.0;
  const double jump = std::log(extent / a);
  double level_shift = sign * decay * jump * std::exp(p.lambda * spec.dt * r);
  const double first_var = x.vols[i - 1].sigma_tilde + sign * jump - level_shift;

  double quad = 0.0, var_ratio = 1.0;
  for (std::size_t j = i; j <= spec.m; ++j) {
    const double d2 = dsq[j - 1];
    if (std::isnan(d2)) return kNegInf;
    const double old_var = x.vols[j - 1].sigma_tilde;
    double new_var;
    if (j == i) {
      new_var = first_var;
    } else {
      new_var = old_var + (1.0 - decay) * level_shift;
      level_shift *= decay;
    }
    if (!(new_var > 0.0)) return kNegInf;
    if (!(old_var > 0.0)) return std::numeric_limits<double>::infinity();
    quad += -0.5 * d2 * (1.0 / new_var - 1.0 / old_var);
    var_ratio *= new_var / old_var;
  }

  const std::size_t n_small = birth ? x.blocks[i - 1].n() : x.blocks[i - 1].n() - 1;
  double log_move = std::log(extent * death_prob(n_small + 1) / birth_prob(n_small));
  if (kind == BirthDeathRatio::corrected) log_move -= std::log(static_cast<double>(n_small + 1));
  return quad - 0.5 * std::log(var_ratio) + sign * log_move;
}

}  // namespace detail

/// Log acceptance ratio of replacing block i by `proposed` (one point more or
/// fewer), holding nu fixed. `proposed` must differ from the current block by
/// one appended point (birth) or one removed point (death).
inline double birth_death_log_ratio(const AsianState& x, std::size_t i, const BnsVolBlock& proposed,
                                    const AsianSpec& spec, BirthDeathRatio kind) {
  const BnsVolBlock& current = x.blocks[i - 1];
  std::vector<double> dsq;
  detail::squared_log_residuals(x, spec, dsq);
  if (proposed.n() == current.n() + 1)
    return detail::point_log_ratio(x, i, proposed.a.back(), proposed.r_times.back(), true, spec, kind, dsq);
  if (proposed.n() + 1 != current.n())
    throw DomainError("birth_death_log_ratio: blocks must differ by exactly one point");
  std::size_t k = 0;
  while (k < proposed.n() && proposed.a[k] == current.a[k] && proposed.r_times[k] == current.r_times[k]) ++k;
  return detail::point_log_ratio(x, i, current.a[k], current.r_times[k], false, spec, kind, dsq);
}

/// Birth/death update of the Poisson block of period i, given the shared
/// residuals from detail::squared_log_residuals.
inline bool mcmc_birth_death(AsianState& x, std::size_t i, const AsianSpec& spec, const McmcConfig& cfg,
                             ParticleRng& rng, const std::vector<double>& dsq) {
  BnsVolBlock& block = x.blocks[i - 1];
  const std::size_t n = block.n();
  if (rng.uniform() < birth_prob(n)) {
    const double a = spec.params.block_extent(spec.dt) * rng.uniform_pos();
    const double r = rng.uniform();
    const double log_ratio = detail::point_log_ratio(x, i, a, r, true, spec, cfg.ratio, dsq);
    if (!(std::log(rng.uniform_pos()) < log_ratio)) return false;
    block.a.push_back(a);
    block.r_times.push_back(r);
  } else {
    if (n == 0) return false;
    const std::size_t k = rng.index_below(n);
    const double log_ratio = detail::point_log_ratio(x, i, block.a[k], block.r_times[k], false, spec, cfg.ratio, dsq);
    if (!(std::log(rng.uniform_pos()) < log_ratio)) return false;
    block.a.erase(block.a.begin() + static_cast<std::ptrdiff_t>(k));
    block.r_times.erase(block.r_times.begin() + static_cast<std::ptrdiff_t>(k));
  }
  asian_refresh_vols(x, spec, i, spec.m);
  return true;
}

inline bool mcmc_birth_death(AsianState& x, std::size_t i, const AsianSpec& spec, const McmcConfig& cfg,
                             ParticleRng& rng) {
  std::vector<double> dsq;
  detail::squared_log_residuals(x, spec, dsq);
  return mcmc_birth_death(x, i, spec, cfg, rng, dsq);
}

/// `sweeps` passes of the price move over i = 1..m followed by the
/// birth/death move over i = 1..m; invariant for the kappa-tempered target.
inline void asian_mcmc_sweeps(AsianState& x, double kappa, const AsianSpec& spec,
                              const McmcConfig& cfg, ParticleRng& rng, MoveCounters* counters) {
  std::uint64_t pp = 0, pa = 0, bp = 0, ba = 0;
  thread_local std::vector<double> dsq;
  for (std::size_t s = 0; s < cfg.sweeps; ++s) {
    for (std::size_t i = 1; i <= spec.m; ++i) {
      ++pp;
      pa += mcmc_price_move(x, i, kappa, spec, rng) ? 1 : 0;
    }
    detail::squared_log_residuals(x, spec, dsq);
    for (std::size_t i = 1; i <= spec.m; ++i) {
      ++bp;
      ba += mcmc_birth_death(x, i, spec, cfg, rng, dsq) ? 1 : 0;
    }
  }
  if (counters) {
    counters->price_proposed.fetch_add(pp, std::memory_order_relaxed);
    counters->price_accepted.fetch_add(pa, std::memory_order_relaxed);
    counters->birth_death_proposed.fetch_add(bp, std::memory_order_relaxed);
    counters->birth_death_accepted.fetch_add(ba, std::memory_order_relaxed);
  }
}

}  // namespace smcprice
