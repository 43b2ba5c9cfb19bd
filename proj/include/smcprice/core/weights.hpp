#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "smcprice/core/errors.hpp"

namespace smcprice {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(x))), max-shifted. Returns -inf when every entry is -inf.
inline double log_sum_exp(std::span<const double> log_values) {
  double peak = kNegInf;
  for (double v : log_values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double v : log_values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

struct NormalizedWeights {
  std::vector<double> weights;
  double log_sum = kNegInf;
};

/**
 * Normalizes natural-log weights.
 *
 * Returns w_i = exp(lw_i - logsumexp(lw)) together with the log of the
 * unnormalized sum. `step` is only used to label the error.
 */
inline NormalizedWeights normalize_weights(std::span<const double> log_weights,
                                           std::size_t step = 0) {
  NormalizedWeights out;
  out.log_sum = log_sum_exp(log_weights);
  if (!std::isfinite(out.log_sum)) throw DegenerateCloudError(step);
  out.weights.resize(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    out.weights[i] = std::exp(log_weights[i] - out.log_sum);
    total += out.weights[i];
  }
  // Second pass removes the O(N eps) drift left by exp rounding.
  for (double& w : out.weights) w /= total;
  return out;
}

/// Effective sample size (sum w)^2 / sum w^2 from log weights; lies in [1, N].
inline double ess(std::span<const double> log_weights, std::size_t step = 0) {
  double peak = kNegInf;
  for (double v : log_weights) peak = std::max(peak, v);
  if (!std::isfinite(peak)) throw DegenerateCloudError(step);
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : log_weights) {
    const double w = std::exp(v - peak);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

}  // namespace smcprice
