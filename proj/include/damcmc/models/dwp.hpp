#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "damcmc/core/logmath.hpp"
#include "damcmc/core/rng.hpp"
#include "damcmc/core/types.hpp"
#include "damcmc/models/timeseries.hpp"

namespace damcmc {

/// Double-well-potential SDE with Ornstein-Uhlenbeck observation error:
///   z_t = x_t + y_t
///   dx  = -dV(x) dt + sigma dW_x
///   dy  = -kappa y dt + sqrt(2 kappa gamma^2) dW_y
/// Seven parameters are inferred on log scale; the asymmetry A and
/// compression g stay fixed.
struct DwpParams {
  double log_kappa = 0.0;
  double log_gamma = 0.0;
  double log_c = 0.0;
  double log_d = 0.0;
  double log_p1 = 0.0;
  double log_p2 = 0.0;
  double log_sigma = 0.0;
  double A = 0.0;
  double g = 0.0;

  double kappa() const { return std::exp(log_kappa); }
  double gamma() const { return std::exp(log_gamma); }
  double c() const { return std::exp(log_c); }
  double d() const { return std::exp(log_d); }
  double p1() const { return std::exp(log_p1); }
  double p2() const { return std::exp(log_p2); }
  double sigma() const { return std::exp(log_sigma); }

  static DwpParams from_point(const ParameterPoint& theta, double A_fixed,
                              double g_fixed) {
    if (theta.size() != 7)
      throw std::invalid_argument("dwp: theta must have dimension 7");
    DwpParams p;
    p.log_kappa = theta[0];
    p.log_gamma = theta[1];
    p.log_c = theta[2];
    p.log_d = theta[3];
    p.log_p1 = theta[4];
    p.log_p2 = theta[5];
    p.log_sigma = theta[6];
    p.A = A_fixed;
    p.g = g_fixed;
    return p;
  }
};

/// V(x) = 1/2 | 1/2 |x-c|^p1 - d + g x |^p2 + 1/2 A x^2
inline double dwp_potential(double x, const DwpParams& p) {
  const double u = 0.5 * std::pow(std::abs(x - p.c()), p.p1()) - p.d() + p.g * x;
  return 0.5 * std::pow(std::abs(u), p.p2()) + 0.5 * p.A * x * x;
}

/// dV/dx. At kink points (|x-c| = 0 or u = 0 with fractional exponents) the
/// subgradient 0 is used, which keeps the drift finite.
inline double dwp_potential_grad(double x, const DwpParams& p) {
  const double c = p.c(), d = p.d(), p1 = p.p1(), p2 = p.p2();
  const double delta = x - c;
  const double abs_delta = std::abs(delta);
  const double u = 0.5 * std::pow(abs_delta, p1) - d + p.g * x;
  const double abs_u = std::abs(u);

  double inner = p.g;
  if (abs_delta > 0.0)
    inner += 0.5 * p1 * std::pow(abs_delta, p1 - 1.0) * (delta > 0 ? 1.0 : -1.0);
  // else: |x-c|^(p1-1) factor defined as 0 at the kink

  double outer = 0.0;
  if (abs_u > 0.0)
    outer = 0.5 * p2 * std::pow(abs_u, p2 - 1.0) * (u > 0 ? 1.0 : -1.0);

  return outer * inner + p.A * x;
}

/// One Euler-Maruyama substep: x - dV(x) dt + sigma * N(0, dt).
inline double dwp_em_step(double x, const DwpParams& p, double dt,
                          RngStream& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("dwp_em_step: dt must be > 0");
  const double eps = rng.normal(0.0, std::sqrt(dt));
  return x - dwp_potential_grad(x, p) * dt + p.sigma() * eps;
}

/// Exact Ornstein-Uhlenbeck transition draw over an interval dT:
/// N(y e^{-kappa dT}, gamma^2 (1 - e^{-2 kappa dT})).
inline double ou_transition_sample(double y, double kappa, double gamma,
                                   double dT, RngStream& rng) {
  if (!(kappa > 0.0) || !(dT > 0.0) || !(gamma >= 0.0))
    throw std::invalid_argument("ou_transition_sample: bad parameters");
  const double decay = std::exp(-kappa * dT);
  const double sd = gamma * std::sqrt(1.0 - decay * decay);
  return rng.normal(y * decay, sd);
}

/// Forward simulation of the observable z at T integer-spaced sampling times.
/// The latent x uses n_substeps Euler substeps per interval; the error y uses
/// exact OU transitions from a stationary start.
inline TimeSeries dwp_simulate(const DwpParams& p, std::size_t T, double dT,
                               std::size_t n_substeps, double x0,
                               RngStream& rng) {
  if (T == 0) throw std::invalid_argument("dwp_simulate: T must be >= 1");
  if (n_substeps < 1)
    throw std::invalid_argument("dwp_simulate: n_substeps must be >= 1");
  TimeSeries out;
  out.x0 = x0;
  out.times.reserve(T);
  out.values.reserve(T);
  const double dt = dT / static_cast<double>(n_substeps);
  double x = x0;
  double y = rng.normal(0.0, p.gamma());  // stationary OU start
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t s = 0; s < n_substeps; ++s) {
      x = dwp_em_step(x, p, dt, rng);
      if (!std::isfinite(x))
        throw std::runtime_error("dwp_simulate: latent path diverged at t=" +
                                 std::to_string(t));
    }
    y = ou_transition_sample(y, p.kappa(), p.gamma(), dT, rng);
    out.times.push_back(static_cast<double>(t) * dT);
    out.values.push_back(x + y);
  }
  return out;
}

/// Log observation weight for the bootstrap filter. For t >= 2 this is the
/// OU-error transition density of z_t given (z_{t-1}, x_t, resampled
/// x_{t-1}); for t = 1 it is the stationary-error density.
inline double dwp_obs_log_weight(double z_t, double z_prev, double x_t,
                                 double x_prev, const DwpParams& p, double dT,
                                 bool is_first) {
  if (!(p.gamma() > 0.0))
    throw std::invalid_argument("dwp_obs_log_weight: gamma must be > 0");
  if (!std::isfinite(x_t) || !std::isfinite(x_prev)) return kNegInf;
  if (is_first) return log_normal_pdf(z_t, x_t, p.gamma());
  const double decay = std::exp(-p.kappa() * dT);
  const double sd = p.gamma() * std::sqrt(1.0 - decay * decay);
  const double mean = x_t + decay * (z_prev - x_prev);
  return log_normal_pdf(z_t, mean, sd);
}

/// Particle-filter facing adapter.
class DwpModel {
 public:
  DwpModel(const DwpParams& params, std::size_t euler_substeps)
      : params_(params), substeps_(std::max<std::size_t>(1, euler_substeps)) {}

  const DwpParams& params() const { return params_; }

  double initial_state(const TimeSeries& data) const { return data.x0; }

  double propagate(double x, double dt, RngStream& rng) const {
    const double sub = dt / static_cast<double>(substeps_);
    for (std::size_t s = 0; s < substeps_; ++s) {
      x = x - dwp_potential_grad(x, params_) * sub +
          params_.sigma() * rng.normal(0.0, std::sqrt(sub));
      if (!std::isfinite(x)) return std::numeric_limits<double>::quiet_NaN();
    }
    return x;
  }

  double obs_log_weight(const TimeSeries& data, std::size_t t, double x_t,
                        double x_prev) const {
    const bool first = (t == 0);
    const double z_t = data.values[t];
    const double z_prev = first ? 0.0 : data.values[t - 1];
    return dwp_obs_log_weight(z_t, z_prev, x_t, x_prev, params_,
                              data.interval(t), first);
  }

 private:
  DwpParams params_;
  std::size_t substeps_;
};

}  // namespace damcmc
