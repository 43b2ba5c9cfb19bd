#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "smcprice/core/rng.hpp"
#include "smcprice/core/weights.hpp"

namespace smcprice {

enum class ResampleScheme { systematic, multinomial };

struct ResampleConfig {
  ResampleScheme scheme = ResampleScheme::systematic;
  /// Resample when ESS falls strictly below this value; 0 disables resampling.
  double ess_threshold = 0.0;
  std::uint64_t rng_seed = 0;
};

/// Systematic resampling: one offset u in [0,1), grid (u + k) / N walked
/// through the weight CDF in particle order.
inline std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u,
                                                   std::size_t count) {
  std::vector<std::size_t> out(count);
  double total = 0.0;
  for (double w : weights) total += w;
  const std::size_t last = weights.size() - 1;
  double cumulative = weights[0] / total;
  std::size_t j = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double point = (u + static_cast<double>(k)) / static_cast<double>(count);
    while (point >= cumulative && j < last) {
      ++j;
      cumulative += weights[j] / total;
    }
    // Rounding in the running sum can leave a zero-weight tail as target.
    std::size_t pick = j;
    while (weights[pick] <= 0.0 && pick > 0) --pick;
    out[k] = pick;
  }
  return out;
}

/// Multinomial resampling by inversion of sorted uniforms.
inline std::vector<std::size_t> multinomial_indices(std::span<const double> weights,
                                                    ParticleRng& rng, std::size_t count) {
  // Sorted uniforms via normalized exponential spacings, O(N).
  std::vector<double> points(count);
  double acc = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    acc -= std::log(rng.uniform_pos());
    points[k] = acc;
  }
  acc -= std::log(rng.uniform_pos());
  for (double& p : points) p /= acc;

  std::vector<std::size_t> out(count);
  double total = 0.0;
  for (double w : weights) total += w;
  const std::size_t last = weights.size() - 1;
  double cumulative = weights[0] / total;
  std::size_t j = 0;
  for (std::size_t k = 0; k < count; ++k) {
    while (points[k] >= cumulative && j < last) {
      ++j;
      cumulative += weights[j] / total;
    }
    std::size_t pick = j;
    while (weights[pick] <= 0.0 && pick > 0) --pick;
    out[k] = pick;
  }
  return out;
}

/// Ancestor indices for one resampling event; E[count_i] = N w_i.
inline std::vector<std::size_t> resample_indices(std::span<const double> log_weights,
                                                 ResampleScheme scheme, ParticleRng& rng,
                                                 std::size_t step = 0) {
  const auto normalized = normalize_weights(log_weights, step);
  const std::size_t n = log_weights.size();
  if (scheme == ResampleScheme::systematic) {
    return systematic_indices(normalized.weights, rng.uniform(), n);
  }
  return multinomial_indices(normalized.weights, rng, n);
}

/// Replicate counts N^i implied by an ancestor vector.
inline std::vector<std::size_t> offspring_counts(std::span<const std::size_t> ancestors,
                                                 std::size_t n) {
  std::vector<std::size_t> counts(n, 0);
  for (std::size_t a : ancestors) ++counts.at(a);
  return counts;
}

}  // namespace smcprice
