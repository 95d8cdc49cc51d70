#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace damcmc {

/// Effective sample size via Geyer's initial-positive-sequence truncation of
/// the autocorrelation sum. A constant chain is defined to have ESS = 1.
/// Result is clamped to (0, n].
inline double effective_sample_size(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 10) throw std::invalid_argument("effective_sample_size: need n >= 10");

  double mean = 0.0;
  for (double x : chain) mean += x;
  mean /= static_cast<double>(n);

  double c0 = 0.0;
  for (double x : chain) c0 += (x - mean) * (x - mean);
  c0 /= static_cast<double>(n);
  if (c0 <= 0.0 || !std::isfinite(c0)) return 1.0;  // degenerate chain

  auto autocov = [&](std::size_t k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < n; ++i)
      acc += (chain[i] - mean) * (chain[i + k] - mean);
    return acc / static_cast<double>(n);
  };

  // Sum paired autocorrelations while the pair sums stay positive.
  double tau = -1.0;
  const std::size_t max_lag = n / 2;
  for (std::size_t m = 0;; ++m) {
    const std::size_t k0 = 2 * m, k1 = 2 * m + 1;
    if (k1 > max_lag) break;
    const double rho0 = autocov(k0) / c0;
    const double rho1 = autocov(k1) / c0;
    const double gamma = rho0 + rho1;
    if (gamma <= 0.0) break;
    tau += 2.0 * gamma;
  }
  tau = std::max(tau, 1.0);
  const double ess = static_cast<double>(n) / tau;
  return std::clamp(ess, 1e-12, static_cast<double>(n));
}

inline double ess_of(const Eigen::VectorXd& v) {
  return effective_sample_size(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

/// Smallest per-coordinate ESS of a multivariate chain.
inline double min_ess(const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) throw std::invalid_argument("min_ess: empty chain");
  const Eigen::Index d = samples.front().size();
  double out = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<double> coord(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) coord[i] = samples[i][j];
    out = std::min(out, effective_sample_size(coord));
  }
  return out;
}

inline double sample_mean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const double> v) {
  const double m = sample_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

/// Empirical quantile with linear interpolation, q in [0, 1].
inline double sample_quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("sample_quantile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

/// Gaussian kernel density on a regular grid; plot-ready marginal densities.
struct DensityGrid {
  std::vector<double> x;
  std::vector<double> density;
};

inline DensityGrid kde_grid(std::span<const double> v, int n_points = 256) {
  if (v.empty()) throw std::invalid_argument("kde_grid: empty input");
  const double sd = std::sqrt(std::max(sample_variance(v), 1e-300));
  const double h = 1.06 * sd * std::pow(static_cast<double>(v.size()), -0.2);
  const double lo = *std::min_element(v.begin(), v.end()) - 3.0 * h;
  const double hi = *std::max_element(v.begin(), v.end()) + 3.0 * h;
  DensityGrid g;
  g.x.resize(n_points);
  g.density.resize(n_points);
  const double norm = 1.0 / (static_cast<double>(v.size()) * h * std::sqrt(2.0 * 3.141592653589793));
  for (int i = 0; i < n_points; ++i) {
    const double xi = lo + (hi - lo) * static_cast<double>(i) / (n_points - 1);
    double acc = 0.0;
    for (double s : v) {
      const double z = (xi - s) / h;
      acc += std::exp(-0.5 * z * z);
    }
    g.x[i] = xi;
    g.density[i] = acc * norm;
  }
  return g;
}

/// Number of strict local maxima of a density grid above a relative floor.
inline int count_density_peaks(const DensityGrid& g, double rel_floor = 0.05) {
  const double peak = *std::max_element(g.density.begin(), g.density.end());
  int count = 0;
  for (std::size_t i = 1; i + 1 < g.density.size(); ++i) {
    if (g.density[i] > g.density[i - 1] && g.density[i] >= g.density[i + 1] &&
        g.density[i] > rel_floor * peak)
      ++count;
  }
  return count;
}

}  // namespace damcmc
