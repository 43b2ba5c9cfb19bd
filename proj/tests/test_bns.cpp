#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "smcprice/models/bns.hpp"
#include "test_support.hpp"

namespace smcprice {
namespace {

using boost::math::quadrature::gauss_kronrod;

const BnsParams kStudy{0.07, 1.0, 0.5, 0.5, 1.0};

TEST(BnsBlock, PoissonMean) {
  const std::size_t draws = 100000;
  std::vector<double> counts(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    auto rng = ParticleRng::stream(5, StreamTag::block, 0, i);
    counts[i] = static_cast<double>(bns_sample_vol_block(kStudy, 1.0, rng).n());
  }
  const auto s = testing::sample_mean(counts);
  EXPECT_NEAR(s.mean, 0.5, 3.0 * s.se);
}

TEST(BnsBlock, SupportAndJointUniformity) {
  const double dt = 1.0;
  const double extent = kStudy.block_extent(dt);
  std::vector<double> cells(16, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < 100000; ++i) {
    auto rng = ParticleRng::stream(6, StreamTag::block, 0, i);
    const auto block = bns_sample_vol_block(kStudy, dt, rng);
    ASSERT_NO_THROW(check_block(block, kStudy));
    for (std::size_t j = 0; j < block.n(); ++j) {
      ASSERT_GT(block.a[j], 0.0);
      ASSERT_LE(block.a[j], extent);
      const auto ia = std::min<std::size_t>(3, static_cast<std::size_t>(4 * block.a[j] / extent));
      const auto ir = std::min<std::size_t>(3, static_cast<std::size_t>(4 * block.r_times[j]));
      cells[4 * ia + ir] += 1.0;
      total += 1.0;
    }
  }
  double chi2 = 0.0;
  for (double c : cells) chi2 += (c - total / 16) * (c - total / 16) / (total / 16);
  const boost::math::chi_squared dist(15);
  EXPECT_LT(chi2, boost::math::quantile(dist, 0.99));
}

TEST(BnsAdvance, NoJumps) {
  BnsVolBlock block;
  block.delta = 0.7;
  const auto next = bns_advance_vol(VolState{0.3, 0.0}, block, kStudy);
  const double decay = std::exp(-kStudy.lambda * 0.7);
  EXPECT_DOUBLE_EQ(next.sigma_bar, decay * 0.3);
  EXPECT_NEAR(next.sigma_tilde, 0.3 * (1.0 - decay), 1e-15);
}

TEST(BnsAdvance, ZeroMagnitudeJump) {
  BnsVolBlock block{{kStudy.block_extent(1.0)}, {0.37}, 1.0};
  const auto next = bns_advance_vol(VolState{0.0, 0.0}, block, kStudy);
  EXPECT_EQ(next.sigma_bar, 0.0);
  EXPECT_EQ(next.sigma_tilde, 0.0);
}

TEST(BnsAdvance, HandEvaluated) {
  BnsVolBlock block{{0.25}, {0.5}, 1.0};
  const auto next = bns_advance_vol(VolState{0.5, 0.0}, block, kStudy);
  EXPECT_NEAR(next.sigma_bar, 0.6043547372886966, 1e-12);
  EXPECT_NEAR(next.sigma_tilde, 0.5887924432712487, 1e-12);
}

TEST(BnsAdvance, ZeroMarkRejected) {
  BnsVolBlock block{{0.0}, {0.5}, 1.0};
  EXPECT_THROW(bns_advance_vol(VolState{0.5, 0.0}, block, kStudy), DomainError);
}

TEST(BnsAdvance, NonnegativeOnRandomBlocks) {
  for (std::size_t i = 0; i < 1000000; ++i) {
    auto rng = ParticleRng::stream(7, StreamTag::block, 1, i);
    BnsParams p = kStudy;
    p.lambda = 0.05 + 4.0 * rng.uniform();
    p.nu = 0.05 + 3.0 * rng.uniform();
    const double dt = 0.05 + 2.0 * rng.uniform();
    const double prev = 3.0 * rng.uniform();
    const auto block = bns_sample_vol_block(p, dt, rng);
    const auto next = bns_advance_vol(VolState{prev, 0.0}, block, p);
    ASSERT_GE(next.sigma_bar, 0.0) << i;
    ASSERT_GE(next.sigma_tilde, -1e-14 * (1.0 + prev)) << i;
  }
}

TEST(BnsAdvance, PermutationInvariant) {
  BnsVolBlock block{{0.1, 0.3, 0.45}, {0.9, 0.2, 0.5}, 1.0};
  BnsVolBlock shuffled{{0.45, 0.1, 0.3}, {0.5, 0.9, 0.2}, 1.0};
  const auto a = bns_advance_vol(VolState{0.2, 0.0}, block, kStudy);
  const auto b = bns_advance_vol(VolState{0.2, 0.0}, shuffled, kStudy);
  EXPECT_NEAR(a.sigma_bar, b.sigma_bar, 1e-15);
  EXPECT_NEAR(a.sigma_tilde, b.sigma_tilde, 1e-15);
}

TEST(BnsAdvance, IntegratedVarianceIsIntegralOfLevel) {
  // sigma_tilde is lambda times the time integral of the piecewise-exponential level.
  BnsVolBlock block{{0.1, 0.3}, {0.25, 0.75}, 1.0};
  const double prev = 0.4;
  const double extent = kStudy.block_extent(1.0);
  auto level = [&](double t) {
    double v = prev * std::exp(-kStudy.lambda * t);
    for (std::size_t j = 0; j < block.n(); ++j) {
      const double tj = block.r_times[j];
      if (tj <= t) v += std::log(extent / block.a[j]) * std::exp(-kStudy.lambda * (t - tj));
    }
    return v;
  };
  double integral = 0.0;
  const double knots[] = {0.0, 0.25, 0.75, 1.0};
  for (int k = 0; k < 3; ++k)
    integral += gauss_kronrod<double, 31>::integrate(level, knots[k], knots[k + 1], 10, 1e-14);
  const auto next = bns_advance_vol(VolState{prev, 0.0}, block, kStudy);
  EXPECT_NEAR(next.sigma_tilde, kStudy.lambda * integral, 1e-12);
}

TEST(BnsMinLevel, AgreesWithFineGrid) {
  for (std::size_t i = 0; i < 2000; ++i) {
    auto rng = ParticleRng::stream(8, StreamTag::block, 2, i);
    const double prev = 2.0 * rng.uniform();
    const auto block = bns_sample_vol_block(kStudy, 1.0, rng);
    const double extent = kStudy.block_extent(1.0);
    double grid_min = 1e300;
    const int cells = 20000;
    for (int k = 0; k <= cells; ++k) {
      const double t = static_cast<double>(k) / cells;
      double v = prev * std::exp(-kStudy.lambda * t);
      for (std::size_t j = 0; j < block.n(); ++j)
        if (block.r_times[j] <= t)
          v += std::log(extent / block.a[j]) * std::exp(-kStudy.lambda * (t - block.r_times[j]));
      grid_min = std::min(grid_min, v);
    }
    const double exact = bns_min_variance_level(prev, block, kStudy);
    ASSERT_LE(exact, grid_min + 1e-12);
    ASSERT_GE(exact, grid_min - 1e-3);
  }
}

TEST(BnsPrior, PoissonBlockDensity) {
  BnsVolBlock block{{0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}, 2.0};
  EXPECT_NEAR(bns_block_log_prior(block, kStudy), -1.0 - std::log(6.0), 1e-15);
}

TEST(BnsLogPrice, ModeValue) {
  EXPECT_NEAR(bns_logprice_log_transition(0.07, 0.0, 0.3, 0.07, 1.0),
              -0.5 * std::log(2 * M_PI * 0.3), 1e-14);
}

TEST(BnsLogPrice, Symmetric) {
  const double sd = std::sqrt(0.3);
  EXPECT_DOUBLE_EQ(bns_logprice_log_transition(0.07 + sd, 0.0, 0.3, 0.07, 1.0),
                   bns_logprice_log_transition(0.07 - sd, 0.0, 0.3, 0.07, 1.0));
}

TEST(BnsLogPrice, IntegratesToOne) {
  auto f = [](double y) { return std::exp(bns_logprice_log_transition(y, 0.2, 0.3, 0.07, 1.0)); };
  const double total = gauss_kronrod<double, 61>::integrate(f, 0.27 - 10.0, 0.27 + 10.0, 15, 1e-13);
  EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(BnsLogPrice, ZeroVarianceRejected) {
  EXPECT_THROW(bns_logprice_log_transition(0.0, 0.0, 0.0, 0.07, 1.0), DomainError);
}

TEST(ShiftedLognormal, ChangeOfVariables) {
  const double nu_i = 3.7, nu_prev = 2.1, nu_prev2 = 1.0;
  const double y = std::log(nu_i - nu_prev);
  const double expected =
      bns_logprice_log_transition(y, std::log(nu_prev - nu_prev2), 0.25, 0.07, 1.0) - y;
  EXPECT_NEAR(shifted_lognormal_logpdf(nu_i, nu_prev, nu_prev2, 0.25, 0.07, 1.0), expected, 1e-14);
}

TEST(ShiftedLognormal, IntegratesToOne) {
  const double nu_prev = 2.1, nu_prev2 = 1.0;
  auto f = [&](double y) {
    return std::exp(shifted_lognormal_logpdf(nu_prev + std::exp(y), nu_prev, nu_prev2, 0.25, 0.07, 1.0) + y);
  };
  const double centre = std::log(1.1) + 0.07;
  const double total = gauss_kronrod<double, 61>::integrate(f, centre - 7.0, centre + 7.0, 15, 1e-13);
  EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(ShiftedLognormal, OrderingViolationRejected) {
  EXPECT_THROW(shifted_lognormal_logpdf(2.0, 2.0, 1.0, 0.25, 0.07, 1.0), DomainError);
  EXPECT_THROW(shifted_lognormal_logpdf(3.0, 2.0, 2.5, 0.25, 0.07, 1.0), DomainError);
  EXPECT_EQ(shifted_lognormal_logpdf_unchecked(1.0, 2.0, 1.0, 0.25, 0.07, 1.0), kNegInf);
}

TEST(ShiftedLognormal, CumulativeSumSimulation) {
  const double s_prev = 1.3, nu_prev = 4.0, sigma_tilde = 0.2, mu = 0.07;
  std::vector<double> nus(100000);
  for (std::size_t i = 0; i < nus.size(); ++i) {
    auto rng = ParticleRng::stream(9, StreamTag::propagate, 0, i);
    const double s = s_prev * std::exp(mu + std::sqrt(sigma_tilde) * rng.normal());
    nus[i] = nu_prev + s;
  }
  // CDF of the density by quadrature from the lower end of the support.
  auto cdf = [&](double nu) {
    auto f = [&](double x) {
      return std::exp(shifted_lognormal_logpdf(x, nu_prev, nu_prev - s_prev, sigma_tilde, mu, 1.0));
    };
    return gauss_kronrod<double, 31>::integrate(f, nu_prev, nu, 12, 1e-12);
  };
  std::sort(nus.begin(), nus.end());
  const double n = static_cast<double>(nus.size());
  double d = 0.0;
  for (std::size_t idx = 500; idx < nus.size(); idx += 1000)
    d = std::max(d, std::abs(cdf(nus[idx]) - static_cast<double>(idx + 1) / n));
  EXPECT_LT(d, testing::ks_critical_01(nus.size()));
}

}  // namespace
}  // namespace smcprice
