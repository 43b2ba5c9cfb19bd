#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "smcprice/barrier/barrier_pricer.hpp"
#include "test_support.hpp"

namespace smcprice {
namespace {

using boost::math::quadrature::gauss_kronrod;
using testing::sample_mean;

constexpr double kInf = std::numeric_limits<double>::infinity();

const GbmParams kTable1{0.01, 0.75, 10.0};

// Expected discounted payoff of the m=2 knock-out call by nested quadrature in
// log-price coordinates.
double two_period_oracle(const GbmParams& p, double barrier, double strike, double dt) {
  const double sd = p.sigma * std::sqrt(dt);
  const double drift = p.log_drift(dt);
  auto density = [&](double y, double y_prev) {
    const double z = (y - y_prev - drift) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
  };
  const double cut = std::log(std::max(barrier, strike));
  auto inner = [&](double y1) {
    auto f = [&](double y2) { return density(y2, y1) * (std::exp(y2) - strike); };
    const double hi = std::max(cut, y1 + drift) + 12.0 * sd;
    return gauss_kronrod<double, 61>::integrate(f, cut, hi, 15, 1e-12);
  };
  const double y0 = std::log(p.s0);
  auto outer = [&](double y1) { return density(y1, y0) * inner(y1); };
  const double total =
      gauss_kronrod<double, 61>::integrate(outer, std::log(barrier), y0 + drift + 12.0 * sd, 15, 1e-12);
  return std::exp(-p.r * 2.0 * dt) * total;
}

TEST(BarrierSpec, Validation) {
  auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, 5.0, 3, 0.5);
  EXPECT_NO_THROW(spec.validate());
  EXPECT_DOUBLE_EQ(spec.maturity(), 1.5);
  auto bad = spec;
  bad.monitor_times[1] = bad.monitor_times[0];
  EXPECT_THROW(bad.validate(), DomainError);
  bad = spec;
  bad.s0 = 4.0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = spec;
  bad.intervals.pop_back();
  EXPECT_THROW(bad.validate(), DomainError);
  EXPECT_THROW((PotentialConfig{2, -0.1, 0.0}.validate()), DomainError);
}

TEST(BarrierSis, InactiveBarrierIsPlainMonteCarlo) {
  const auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, 0.0, 4, 0.5);
  const std::size_t n = 20000;
  const auto out = price_barrier_sis(spec, kTable1, n, 11);
  for (double e : out.ess_trace) EXPECT_NEAR(e, static_cast<double>(n), 1e-6);
  EXPECT_DOUBLE_EQ(out.z, 1.0);
  const double truth = bs_call_price(10.0, 10.0, 0.01, 0.75, 2.0);
  std::vector<double> prices;
  for (std::uint64_t seed = 0; seed < 40; ++seed)
    prices.push_back(price_barrier_sis(spec, kTable1, 2000, 100 + seed).price);
  const auto rep = sample_mean(prices);
  EXPECT_NEAR(rep.mean, truth, 3.0 * rep.se);
}

TEST(BarrierSis, SinglePeriodMatchesTruncatedExpectation) {
  const auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, 8.0, 1, 0.5);
  const double sd = 0.75 * std::sqrt(0.5);
  const double mean = std::log(10.0) + kTable1.log_drift(0.5);
  auto f = [&](double y) {
    const double z = (y - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI)) * std::max(std::exp(y) - 10.0, 0.0);
  };
  const double truth =
      std::exp(-0.01 * 0.5) * gauss_kronrod<double, 61>::integrate(f, std::log(10.0), mean + 12 * sd, 15, 1e-12);
  const std::size_t n = 100000;
  const auto out = price_barrier_sis(spec, kTable1, n, 3);
  // All particles share the survival weight, so the SE is that of a plain mean.
  const double surv = gbm_survival_prob(10.0, spec.intervals[0], 0.5, kTable1);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = ParticleRng::stream(3, StreamTag::propagate, 1, i);
    const double s = gbm_sample_conditioned(10.0, spec.intervals[0], 0.5, kTable1, rng);
    const double pay = std::max(s - 10.0, 0.0);
    m1 += pay;
    m2 += pay * pay;
  }
  m1 /= n;
  const double se = std::exp(-0.005) * surv * std::sqrt((m2 / n - m1 * m1) / n);
  EXPECT_NEAR(out.price, truth, 3.0 * se);
  EXPECT_NEAR(out.price, std::exp(-0.005) * surv * m1, 1e-11 * out.price);
}

TEST(BarrierSir, ZeroThresholdIsSis) {
  const auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, 5.0, 10, 0.5);
  const auto a = price_barrier_sis(spec, kTable1, 3000, 8);
  const auto b = price_barrier_sir(spec, kTable1, 3000, ResampleConfig{ResampleScheme::systematic, 0.0, 8});
  EXPECT_EQ(a.price, b.price);
  EXPECT_EQ(a.ess_trace, b.ess_trace);
  EXPECT_EQ(b.resample_count, 0u);
}

TEST(BarrierTempered, NullPotentialIsSir) {
  const auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, 5.0, 25, 0.5);
  const ResampleConfig cfg{ResampleScheme::systematic, 1500.0, 21};
  const auto a = price_barrier_sir(spec, kTable1, 3000, cfg);
  const auto b = price_barrier_tempered(spec, kTable1, 3000, cfg, PotentialConfig{10, 0.0, 0.0});
  EXPECT_EQ(a.price, b.price);
  EXPECT_EQ(a.ess_trace, b.ess_trace);
  EXPECT_EQ(a.z, b.z);
}

TEST(BarrierSir, ResamplingRestoresEss) {
  const auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, 5.0, 25, 0.5);
  const double threshold = 1500.0;
  const auto out = price_barrier_sir(spec, kTable1, 3000, ResampleConfig{ResampleScheme::systematic, threshold, 4});
  EXPECT_GE(out.resample_count, 1u);
  for (std::size_t k = 1; k + 1 < out.ess_trace.size(); ++k)
    EXPECT_FALSE(out.ess_trace[k] < threshold && out.ess_trace[k + 1] < threshold) << "step " << k;
}

TEST(BarrierSis, EssDecaysWithHorizon) {
  double prev = kInf;
  for (std::size_t m : {5, 10, 15}) {
    const auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, 5.0, m, 0.5);
    const double e = price_barrier_sis(spec, kTable1, 5000, 2).ess_final;
    EXPECT_LT(e, prev);
    prev = e;
  }
}

struct TwoPeriodCase {
  const char* name;
  int method;  // 0 sis, 1 sir, 2 tempered
};

void PrintTo(const TwoPeriodCase& c, std::ostream* os) { *os << c.name; }

class TwoPeriodAgreement : public ::testing::TestWithParam<TwoPeriodCase> {};

TEST_P(TwoPeriodAgreement, MatchesQuadrature) {
  const double barrier = 8.5, dt = 0.5;
  const double truth = two_period_oracle(kTable1, barrier, 10.0, dt);
  const auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, barrier, 2, dt);
  std::vector<double> prices;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const std::uint64_t seed = 5000 + r;
    const std::size_t n = 1000;
    const ResampleConfig cfg{ResampleScheme::systematic, static_cast<double>(n), seed};
    switch (GetParam().method) {
      case 0: prices.push_back(price_barrier_sis(spec, kTable1, n, seed).price); break;
      case 1: prices.push_back(price_barrier_sir(spec, kTable1, n, cfg).price); break;
      default:
        prices.push_back(price_barrier_tempered(spec, kTable1, n, cfg, PotentialConfig{1, 0.5, 0.3}).price);
    }
  }
  const auto s = sample_mean(prices);
  EXPECT_NEAR(s.mean, truth, 3.0 * s.se) << "truth " << truth;
}

INSTANTIATE_TEST_SUITE_P(Estimators, TwoPeriodAgreement,
                         ::testing::Values(TwoPeriodCase{"sis", 0}, TwoPeriodCase{"sir", 1},
                                           TwoPeriodCase{"tempered", 2}),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(BarrierModelGuard, StrikeHitIsFlooredAndCounted) {
  const auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, 5.0, 2, 0.5);
  BarrierModel<GbmDynamics> model(spec, GbmDynamics{kTable1}, PotentialConfig{1, 0.5, 0.0});
  const double v = model.log_distance(10.0);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(model.guard_events(), 1u);
  EXPECT_DOUBLE_EQ(model.log_distance(12.0), std::log(2.0));
  EXPECT_EQ(model.guard_events(), 1u);
}

// Plain simulation of BNS paths with knock-out as an independent oracle.
TEST(BarrierBns, ConditionedMatchesPlainSimulation) {
  BnsParams p{0.02, 1.0, 0.5, 0.5, 1.0};
  const double dt = 0.25, barrier = 0.8, strike = 1.0;
  const std::size_t m = 4;
  auto spec = BarrierSpec::down_and_out(1.0, strike, 0.02, barrier, m, dt);
  std::vector<double> plain(400000);
  for (std::size_t i = 0; i < plain.size(); ++i) {
    auto rng = ParticleRng::stream(31, StreamTag::propagate, 0, i);
    double s = 1.0, level = p.v0;
    bool alive = true;
    for (std::size_t k = 0; k < m && alive; ++k) {
      const auto block = bns_sample_vol_block(p, dt, rng);
      const auto vol = bns_advance_vol(VolState{level, 0.0}, block, p);
      level = vol.sigma_bar;
      s *= std::exp(p.mu * dt + std::sqrt(vol.sigma_tilde) * rng.normal());
      alive = s >= barrier;
    }
    plain[i] = alive ? std::exp(-0.02 * dt * m) * std::max(s - strike, 0.0) : 0.0;
  }
  const auto ref = sample_mean(plain);
  std::vector<double> prices;
  for (std::uint64_t r = 0; r < 100; ++r)
    prices.push_back(price_barrier_sis(spec, p, 2000, 900 + r).price);
  const auto est = sample_mean(prices);
  EXPECT_NEAR(est.mean, ref.mean, 3.0 * std::hypot(est.se, ref.se));
}

}  // namespace
}  // namespace smcprice
