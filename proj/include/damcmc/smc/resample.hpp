#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "damcmc/core/logmath.hpp"
#include "damcmc/core/rng.hpp"

namespace damcmc {

enum class ResampleScheme { Multinomial, Systematic };

/// Normalizes log weights to linear probabilities (log-sum-exp shifted).
/// Throws if every weight is -inf.
inline std::vector<double> normalize_log_weights(
    const std::vector<double>& log_weights) {
  const double total = log_sum_exp(log_weights);
  if (total == kNegInf)
    throw std::runtime_error("resample: all particle weights are zero");
  std::vector<double> probs(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i)
    probs[i] = std::exp(log_weights[i] - total);
  return probs;
}

/// Ancestor indices, each drawn independently with probability prop. to w_i.
inline std::vector<std::size_t> resample_multinomial(
    const std::vector<double>& probs, RngStream& rng) {
  const std::size_t n = probs.size();
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += probs[i];
    cdf[i] = acc;
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform01() * acc;
    std::size_t i = 0;
    while (i + 1 < n && u >= cdf[i]) ++i;
    idx[k] = i;
  }
  return idx;
}

/// Systematic resampling: a single uniform offset, stratified positions.
/// Ancestor counts are within floor/ceil of n * w_i for every particle.
inline std::vector<std::size_t> resample_systematic(
    const std::vector<double>& probs, RngStream& rng) {
  const std::size_t n = probs.size();
  std::vector<std::size_t> idx(n);
  const double step = 1.0 / static_cast<double>(n);
  double position = rng.uniform01() * step;
  double cdf = probs[0];
  std::size_t i = 0;
  for (std::size_t k = 0; k < n; ++k) {
    while (position > cdf && i + 1 < n) {
      ++i;
      cdf += probs[i];
    }
    idx[k] = i;
    position += step;
  }
  return idx;
}

inline std::vector<std::size_t> resample_indices(
    const std::vector<double>& log_weights, ResampleScheme scheme,
    RngStream& rng) {
  const auto probs = normalize_log_weights(log_weights);
  return scheme == ResampleScheme::Systematic
             ? resample_systematic(probs, rng)
             : resample_multinomial(probs, rng);
}

}  // namespace damcmc
