#pragma once

#include <cmath>
#include <stdexcept>

#include "damcmc/core/logmath.hpp"
#include "damcmc/core/rng.hpp"
#include "damcmc/core/types.hpp"
#include "damcmc/models/timeseries.hpp"

namespace damcmc {

/// Population model: x_{t+1} = r x_t exp(-x_t + eps), y_t ~ Poisson(phi x_t).
/// Parameters are sampled on log scale.
struct RickerParams {
  double log_r = 0.0;
  double log_phi = 0.0;
  double log_sigma = 0.0;

  double r() const { return std::exp(log_r); }
  double phi() const { return std::exp(log_phi); }
  double sigma() const { return std::exp(log_sigma); }

  static RickerParams from_point(const ParameterPoint& theta) {
    if (theta.size() != 3)
      throw std::invalid_argument("ricker: theta must have dimension 3");
    return {theta[0], theta[1], theta[2]};
  }
};

/// One latent step. Zero is absorbing.
inline double ricker_propagate(double x, const RickerParams& p, RngStream& rng) {
  if (!(x >= 0.0) || !std::isfinite(x))
    throw std::invalid_argument("ricker_propagate: x must be finite and >= 0");
  if (x == 0.0) {
    rng.normal();  // keep stream position independent of the state value
    return 0.0;
  }
  const double eps = rng.normal(0.0, p.sigma());
  return p.r() * x * std::exp(-x + eps);
}

/// Poisson(phi x) log-pmf at count y. Convention at x = 0: point mass at 0.
inline double ricker_obs_logpdf(long long y, double x, const RickerParams& p) {
  if (y < 0) throw std::invalid_argument("ricker_obs_logpdf: y < 0");
  const double lambda = p.phi() * x;
  if (lambda == 0.0) return y == 0 ? 0.0 : kNegInf;
  const double yd = static_cast<double>(y);
  return yd * std::log(lambda) - lambda - std::lgamma(yd + 1.0);
}

/// Particle-filter facing adapter: bootstrap propagation plus observation
/// weights against a stored data set.
class RickerModel {
 public:
  explicit RickerModel(const RickerParams& params) : params_(params) {}

  static RickerModel from_point(const ParameterPoint& theta) {
    return RickerModel(RickerParams::from_point(theta));
  }

  const RickerParams& params() const { return params_; }

  double initial_state(const TimeSeries& data) const { return data.x0; }

  double propagate(double x, double /*dt*/, RngStream& rng) const {
    if (!std::isfinite(x) || x < 0.0) return std::numeric_limits<double>::quiet_NaN();
    return ricker_propagate(x, params_, rng);
  }

  double obs_log_weight(const TimeSeries& data, std::size_t t, double x_t,
                        double /*x_prev*/) const {
    if (!std::isfinite(x_t)) return kNegInf;
    const long long y = static_cast<long long>(std::llround(data.values[t]));
    return ricker_obs_logpdf(y, x_t, params_);
  }

 private:
  RickerParams params_;
};

/// Forward simulation at integer sampling times 1..T from fixed x0.
inline TimeSeries simulate_ricker(const RickerParams& p, std::size_t T,
                                  double x0, RngStream& rng) {
  if (T == 0) throw std::invalid_argument("simulate_ricker: T must be >= 1");
  TimeSeries out;
  out.x0 = x0;
  out.times.reserve(T);
  out.values.reserve(T);
  double x = x0;
  for (std::size_t t = 1; t <= T; ++t) {
    x = ricker_propagate(x, p, rng);
    const double lambda = p.phi() * x;
    out.times.push_back(static_cast<double>(t));
    out.values.push_back(static_cast<double>(rng.poisson(lambda)));
  }
  return out;
}

}  // namespace damcmc
