#pragma once

// Test-only models and oracles, independent of the library's implementation
// paths they are used to check.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "damcmc/core/logmath.hpp"
#include "damcmc/core/rng.hpp"
#include "damcmc/models/timeseries.hpp"

namespace testsupport {

/// Linear-Gaussian state-space model:
///   x_t = a x_{t-1} + q eps,  y_t = x_t + mu + r eta,  x_0 known.
struct LinearGaussianModel {
  double a = 0.8;
  double q = 0.5;
  double r = 1.0;
  double mu = 0.0;

  double initial_state(const damcmc::TimeSeries& data) const { return data.x0; }

  double propagate(double x, double /*dt*/, damcmc::RngStream& rng) const {
    return a * x + q * rng.normal();
  }

  double obs_log_weight(const damcmc::TimeSeries& data, std::size_t t,
                        double x_t, double /*x_prev*/) const {
    return damcmc::log_normal_pdf(data.values[t], x_t + mu, r);
  }
};

inline damcmc::TimeSeries simulate_lgssm(const LinearGaussianModel& m,
                                         std::size_t T, double x0,
                                         damcmc::RngStream& rng) {
  damcmc::TimeSeries ts;
  ts.x0 = x0;
  double x = x0;
  for (std::size_t t = 1; t <= T; ++t) {
    x = m.a * x + m.q * rng.normal();
    ts.times.push_back(static_cast<double>(t));
    ts.values.push_back(x + m.mu + m.r * rng.normal());
  }
  return ts;
}

/// Exact log-likelihood by Kalman recursion (x_0 known exactly).
inline double kalman_loglik(const LinearGaussianModel& m,
                            const damcmc::TimeSeries& data) {
  double mean = data.x0;
  double var = 0.0;
  double loglik = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    const double pred_mean = m.a * mean;
    const double pred_var = m.a * m.a * var + m.q * m.q;
    const double s = pred_var + m.r * m.r;
    const double innov = data.values[t] - (pred_mean + m.mu);
    loglik += -0.5 * innov * innov / s - 0.5 * std::log(2.0 * 3.141592653589793 * s);
    const double gain = pred_var / s;
    mean = pred_mean + gain * innov;
    var = (1.0 - gain) * pred_var;
  }
  return loglik;
}

/// Marginal moments of the latent path (x_1..x_T) for the conjugate oracle:
/// m[t] = a^{t+1} x0, cov[s][t] = q^2 sum_{j} a^{s-j} a^{t-j}.
inline void lgssm_latent_moments(const LinearGaussianModel& m, std::size_t T,
                                 double x0, Eigen::VectorXd& mean,
                                 Eigen::MatrixXd& cov) {
  mean.resize(static_cast<Eigen::Index>(T));
  for (std::size_t t = 0; t < T; ++t)
    mean[static_cast<Eigen::Index>(t)] = std::pow(m.a, static_cast<double>(t + 1)) * x0;
  cov.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(T));
  for (std::size_t s = 0; s < T; ++s) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t n = std::min(s, t) + 1;
      double acc = 0.0;
      for (std::size_t j = 1; j <= n; ++j)
        acc += std::pow(m.a, static_cast<double>(s + 1 - j)) *
               std::pow(m.a, static_cast<double>(t + 1 - j));
      cov(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) =
          m.q * m.q * acc;
    }
  }
}

/// Analytic posterior for the observation offset mu with a Gaussian prior,
/// marginalizing the latent path exactly.
inline std::pair<double, double> conjugate_mu_posterior(
    const LinearGaussianModel& m, const damcmc::TimeSeries& data,
    double prior_mean, double prior_sd) {
  const std::size_t T = data.size();
  Eigen::VectorXd mx;
  Eigen::MatrixXd cx;
  lgssm_latent_moments(m, T, data.x0, mx, cx);
  Eigen::MatrixXd S = cx;
  S.diagonal().array() += m.r * m.r;
  const Eigen::MatrixXd Sinv = S.inverse();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(T));
  Eigen::VectorXd resid(static_cast<Eigen::Index>(T));
  for (std::size_t t = 0; t < T; ++t)
    resid[static_cast<Eigen::Index>(t)] = data.values[t] - mx[static_cast<Eigen::Index>(t)];
  const double prec = 1.0 / (prior_sd * prior_sd) + ones.dot(Sinv * ones);
  const double mean =
      (prior_mean / (prior_sd * prior_sd) + ones.dot(Sinv * resid)) / prec;
  return {mean, std::sqrt(1.0 / prec)};
}

}  // namespace testsupport
