#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "smcprice/asian/asian_pricer.hpp"
#include "smcprice/asian/is_baseline.hpp"
#include "smcprice/barrier/barrier_pricer.hpp"
#include "smcprice/core/resample.hpp"
#include "smcprice/greeks/greeks.hpp"
#include "smcprice/harness/report.hpp"

namespace smcprice {

struct SelftestResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  const auto a = aggregate(xs);
  return {a.mean, std::sqrt(a.variance / static_cast<double>(xs.size()))};
}

inline SelftestResult within(const std::string& name, double est, double se, double truth, double k = 3.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "estimate %.6g, reference %.6g, |diff|/se %.2f", est, truth,
                std::abs(est - truth) / se);
  return {name, std::abs(est - truth) <= k * se, buf};
}

}  // namespace detail

/// Quick oracle checks, a few seconds in total.
inline std::vector<SelftestResult> run_selftest() {
  std::vector<std::function<SelftestResult()>> checks;

  checks.push_back([] {
    const std::vector<double> lw = {std::log(0.1), std::log(0.2), std::log(0.3), std::log(0.4)};
    bool ok = true;
    std::string detail;
    for (auto scheme : {ResampleScheme::systematic, ResampleScheme::multinomial}) {
      std::vector<double> counts(4, 0.0);
      const std::size_t trials = 4000;
      for (std::size_t t = 0; t < trials; ++t) {
        auto rng = ParticleRng::stream(3, StreamTag::resample, t, 0);
        for (std::size_t a : resample_indices(lw, scheme, rng)) counts[a] += 1.0;
      }
      for (std::size_t i = 0; i < 4; ++i) {
        const double w = std::exp(lw[i]);
        const double mean = counts[i] / trials;
        const double se = std::sqrt(4.0 * w * (1.0 - w) / trials);
        ok = ok && std::abs(mean - 4.0 * w) <= 3.0 * se + 1e-12;
      }
    }
    detail = ok ? "offspring means within 3 SE of N w" : "offspring mean outside 3 SE";
    return SelftestResult{"resampling-unbiased", ok, detail};
  });

  checks.push_back([] {
    const GbmParams p{0.01, 0.75, 10.0};
    const auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, 0.0, 4, 0.5);
    std::vector<double> xs;
    for (std::uint64_t r = 0; r < 40; ++r) xs.push_back(price_barrier_sis(spec, p, 2000, 10 + r).price);
    const auto s = detail::mean_se(xs);
    return detail::within("vanilla-call", s.mean, s.se, bs_call_price(10.0, 10.0, 0.01, 0.75, 2.0));
  });

  checks.push_back([] {
    const GbmParams p{0.01, 0.75, 10.0};
    const double v = bgk_barrier_price(p, 5.0, 10.0, 25, 0.5);
    char buf[80];
    std::snprintf(buf, sizeof buf, "corrected price %.4f", v);
    return SelftestResult{"bgk-reference", std::abs(v - 6.16) <= 0.05, buf};
  });

  checks.push_back([] {
    const GbmParams p{0.01, 0.75, 10.0};
    const auto spec = BarrierSpec::down_and_out(10.0, 10.0, 0.01, 0.0, 1, 0.5);
    const auto out = barrier_delta_vega(spec, p, 20000, 20, 50);
    return detail::within("vanilla-delta", out.delta.mean, out.delta.se, bs_call_delta(10.0, 10.0, 0.01, 0.75, 0.5));
  });

  checks.push_back([] {
    // One date with a deterministic variance path: a lognormal call.
    AsianSpec spec;
    spec.params = BnsParams{0.02, 1.0, 1e-9, 0.1, 1.0};
    spec.strike = 1.0;
    spec.m = 1;
    const double var = 0.1 * (1.0 - std::exp(-1.0));
    const double sd = std::sqrt(var);
    const double d2 = 0.02 / sd;
    const double truth = std::exp(0.02 + 0.5 * var) * 0.5 * std::erfc(-(d2 + sd) / std::sqrt(2.0)) -
                         0.5 * std::erfc(-d2 / std::sqrt(2.0));
    AsianTemperSchedule sched;
    sched.stage1 = PotentialConfig{1, 0.5, 0.0};
    sched.p = 4;
    std::vector<double> smc, is;
    for (std::uint64_t r = 0; r < 30; ++r) {
      smc.push_back(price_asian_smc(spec, sched, 1000, ResampleConfig{ResampleScheme::systematic, 500.0, 70 + r}).price);
      is.push_back(price_asian_is(spec, 1000, 90 + r).price);
    }
    const auto a = detail::mean_se(smc), b = detail::mean_se(is);
    auto ra = detail::within("asian-deterministic-smc", a.mean, a.se, truth);
    auto rb = detail::within("asian-deterministic-is", b.mean, b.se, truth);
    return SelftestResult{"asian-deterministic", ra.pass && rb.pass, ra.detail + "; " + rb.detail};
  });

  std::vector<SelftestResult> out;
  for (auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"exception", false, e.what()});
    }
  }
  return out;
}

}  // namespace smcprice
