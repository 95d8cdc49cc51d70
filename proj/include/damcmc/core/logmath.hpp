#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace damcmc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum_i exp(v_i)), max-shifted for stability. All -inf inputs give -inf.
inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) {
    if (m == kNegInf) return kNegInf;
    throw std::invalid_argument("log_sum_exp: non-finite input");
  }
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

/// log((1/n) sum_i exp(v_i)). Entries of -inf contribute zero mass to the
/// linear-domain average.
inline double log_mean_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_mean_exp: empty input");
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

/// The single Metropolis-Hastings acceptance test used engine-wide: accepts
/// iff log(u) < min(0, log_ratio). Operates purely in log domain.
inline bool mh_accept(double log_ratio, double u) {
  if (std::isnan(log_ratio))
    throw std::invalid_argument("mh_accept: NaN log ratio");
  return std::log(u) < std::min(0.0, log_ratio);
}

/// Log ratio of two likelihood values that may individually be -inf. An
/// impossible numerator always loses; an impossible denominator always
/// yields +inf; never NaN.
inline double safe_log_lik_ratio(double log_num, double log_den) {
  if (log_num == kNegInf) return kNegInf;
  if (log_den == kNegInf) return std::numeric_limits<double>::infinity();
  return log_num - log_den;
}

inline double log_normal_pdf(double x, double mean, double sd) {
  static const double half_log_2pi = 0.5 * std::log(2.0 * 3.141592653589793);
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - half_log_2pi;
}

}  // namespace damcmc
