#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "smcprice/barrier/barrier_pricer.hpp"
#include "smcprice/models/bns.hpp"

namespace smcprice {

/// Fixed-strike arithmetic Asian call on m equally spaced dates under BNS.
struct AsianSpec {
  BnsParams params;
  double strike = 0.0;
  std::size_t m = 0;
  double dt = 1.0;
  double rate = 0.0;  // discount rate, applied once at reporting

  double maturity() const { return static_cast<double>(m) * dt; }

  void validate() const {
    params.validate();
    if (!(params.v0 > 0.0)) throw DomainError("AsianSpec: v0 must be positive");
    if (!(strike > 0.0)) throw DomainError("AsianSpec: strike must be positive");
    if (m == 0) throw DomainError("AsianSpec: need at least one averaging date");
    if (!(dt > 0.0)) throw DomainError("AsianSpec: dt must be positive");
  }
};

/**
 * Path state in cumulative-sum coordinates.
 *
 * nu[i-1] = S_1 + ... + S_i. The two values before the first date are
 * nu_0 = 0 and nu_{-1} = -S_0, so that every price increment is
 * nu_i - nu_{i-1} and its predecessor is nu_{i-1} - nu_{i-2}.
 */
struct AsianState {
  std::vector<double> nu;
  std::vector<BnsVolBlock> blocks;
  std::vector<VolState> vols;
};

/// nu_i for i in {-1, 0, 1, ..., m}.
inline double nu_at(const AsianState& x, const AsianSpec& spec, long i) {
  if (i > 0) return x.nu[static_cast<std::size_t>(i - 1)];
  return i == 0 ? 0.0 : -spec.params.s0;
}

/// Average of the first m prices minus the strike, using nu at date `n`.
inline double asian_moneyness(const AsianState& x, const AsianSpec& spec, std::size_t n) {
  return nu_at(x, spec, static_cast<long>(n)) / static_cast<double>(spec.m) - spec.strike;
}

/// kappa * log|nu_n / m - K|, with the convention 0 * log 0 = 0.
inline double asian_log_potential(const AsianState& x, const AsianSpec& spec, std::size_t n,
                                  double kappa) {
  if (kappa == 0.0) return 0.0;
  const double gap = std::abs(asian_moneyness(x, spec, n));
  return gap > 0.0 ? kappa * std::log(gap) : kNegInf;
}

/// Log shifted-lognormal density of nu_i given nu_{i-1}, nu_{i-2} and the
/// period's integrated variance; -inf off the support.
inline double asian_period_logpdf(const AsianState& x, const AsianSpec& spec, std::size_t i) {
  const long j = static_cast<long>(i);
  return shifted_lognormal_logpdf_unchecked(nu_at(x, spec, j), nu_at(x, spec, j - 1),
                                            nu_at(x, spec, j - 2), x.vols[i - 1].sigma_tilde,
                                            spec.params.mu, spec.dt);
}

/// Recomputes vols[i-1..m-1] from the blocks.
inline void asian_refresh_vols(AsianState& x, const AsianSpec& spec, std::size_t from_period,
                               std::size_t to_period) {
  for (std::size_t i = from_period; i <= to_period; ++i) {
    const VolState prev = i == 1 ? VolState{spec.params.v0, 0.0} : x.vols[i - 2];
    x.vols[i - 1] = bns_advance_vol(prev, x.blocks[i - 1], spec.params);
  }
}

/**
 * Unnormalized log target on dates 1..n:
 *   kappa log|nu_n/m - K| + sum_i log phi_i + sum_i log p(v_i).
 */
inline double asian_target_logdensity(const AsianState& x, const AsianSpec& spec, double kappa,
                                      std::size_t n) {
  double acc = asian_log_potential(x, spec, n, kappa);
  if (acc == kNegInf) return kNegInf;
  for (std::size_t i = 1; i <= n; ++i) {
    const double term = asian_period_logpdf(x, spec, i);
    if (term == kNegInf) return kNegInf;
    acc += term + bns_block_log_prior(x.blocks[i - 1], spec.params);
  }
  return acc;
}

inline double asian_target_logdensity(const AsianState& x, const AsianSpec& spec, double kappa) {
  return asian_target_logdensity(x, spec, kappa, spec.m);
}

/// Draws period n's block and price from the process law given dates < n.
inline void asian_extend(AsianState& x, const AsianSpec& spec, std::size_t n, ParticleRng& rng) {
  x.blocks[n - 1] = bns_sample_vol_block(spec.params, spec.dt, rng);
  asian_refresh_vols(x, spec, n, n);
  const long j = static_cast<long>(n);
  const double prev_step = nu_at(x, spec, j - 1) - nu_at(x, spec, j - 2);
  const double sd = std::sqrt(x.vols[n - 1].sigma_tilde);
  x.nu[n - 1] = nu_at(x, spec, j - 1) + prev_step * std::exp(spec.params.mu * spec.dt + sd * rng.normal());
}

inline AsianState asian_empty_state(const AsianSpec& spec) {
  AsianState x;
  x.nu.assign(spec.m, 0.0);
  x.blocks.assign(spec.m, BnsVolBlock{{}, {}, spec.dt});
  x.vols.assign(spec.m, VolState{});
  return x;
}

/// Stage-1 model: process-law proposals, potential-ratio weights.
class AsianStage1Model {
 public:
  using State = AsianState;

  AsianStage1Model(const AsianSpec& spec, PotentialConfig schedule)
      : spec_(&spec), schedule_(schedule) {}

  State initial(ParticleRng&) const { return asian_empty_state(*spec_); }
  double initial_log_weight(const State&, ParticleRng&) const { return 0.0; }

  double advance(State& x, std::size_t n, ParticleRng& rng) const {
    const double before = asian_log_potential(x, *spec_, n - 1, schedule_.kappa_at(n - 1));
    asian_extend(x, *spec_, n, rng);
    const double after = asian_log_potential(x, *spec_, n, schedule_.kappa_at(n));
    if (after == kNegInf || before == kNegInf) return kNegInf;
    return after - before;
  }

 private:
  const AsianSpec* spec_;
  PotentialConfig schedule_;
};

/// (x)_+ / |x|^kappa, which is the indicator x > 0 when kappa == 1.
inline double tempered_call_ratio(double x, double kappa) {
  if (!(x > 0.0)) return 0.0;
  if (kappa == 1.0) return 1.0;
  if (kappa == 0.0) return x;
  return std::exp((1.0 - kappa) * std::log(x));
}

}  // namespace smcprice
