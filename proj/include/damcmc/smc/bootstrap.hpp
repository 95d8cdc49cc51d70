#pragma once

#include <cmath>
#include <cstddef>
#include <future>
#include <stdexcept>
#include <vector>

#include "damcmc/core/logmath.hpp"
#include "damcmc/core/rng.hpp"
#include "damcmc/core/types.hpp"
#include "damcmc/models/timeseries.hpp"
#include "damcmc/smc/resample.hpp"

namespace damcmc {

/// Requirements on a state-space model usable with the bootstrap filter.
template <typename M>
concept StateSpaceModel = requires(const M m, const TimeSeries& data, double x,
                                   double dt, std::size_t t, RngStream& rng) {
  { m.initial_state(data) } -> std::convertible_to<double>;
  { m.propagate(x, dt, rng) } -> std::convertible_to<double>;
  { m.obs_log_weight(data, t, x, x) } -> std::convertible_to<double>;
};

/// Particle cloud at one time index.
struct ParticleSystem {
  std::vector<double> particles;
  std::vector<double> log_weights;
  std::size_t t = 0;
};

struct PfConfig {
  std::size_t n_particles = 1000;
  std::size_t n_replicates = 1;
  ResampleScheme resampling = ResampleScheme::Systematic;
  std::size_t euler_substeps = 10;
  std::size_t workers = 1;
};

/// Resamples a particle system; output weights are uniform.
inline ParticleSystem resample(const ParticleSystem& system,
                               ResampleScheme scheme, RngStream& rng) {
  const auto idx = resample_indices(system.log_weights, scheme, rng);
  ParticleSystem out;
  out.t = system.t;
  out.particles.resize(system.particles.size());
  for (std::size_t k = 0; k < idx.size(); ++k)
    out.particles[k] = system.particles[idx[k]];
  out.log_weights.assign(system.particles.size(),
                         -std::log(static_cast<double>(system.particles.size())));
  return out;
}

/// Bootstrap particle filter. Returns log p_hat(z | theta) =
/// sum_t log( (1/N) sum_n w_t^n ), resampling after every weight update.
/// The estimate is unbiased in the linear domain. If every weight vanishes
/// at some step, the estimate is -inf and flagged as collapsed.
template <StateSpaceModel M>
LogLikEstimate bootstrap_loglik(const M& model, const TimeSeries& data,
                                std::size_t n_particles, ResampleScheme scheme,
                                RngStream& rng) {
  if (data.empty())
    throw std::invalid_argument("bootstrap_loglik: empty data");
  if (n_particles < 1)
    throw std::invalid_argument("bootstrap_loglik: need at least 1 particle");

  const std::size_t T = data.size();
  const double x0 = model.initial_state(data);
  std::vector<double> prev(n_particles, x0);   // resampled positions at t-1
  std::vector<double> curr(n_particles, 0.0);  // propagated positions at t
  std::vector<double> logw(n_particles, 0.0);

  double loglik = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double dt = data.interval(t);
    for (std::size_t n = 0; n < n_particles; ++n) {
      curr[n] = model.propagate(prev[n], dt, rng);
      logw[n] = model.obs_log_weight(data, t, curr[n], prev[n]);
    }
    const double step = log_sum_exp(logw) -
                        std::log(static_cast<double>(n_particles));
    if (step == kNegInf)
      return {kNegInf, LogLikSource::ParticleFilter, true};
    loglik += step;

    const auto idx = resample_indices(logw, scheme, rng);
    for (std::size_t n = 0; n < n_particles; ++n) prev[n] = curr[idx[n]];
  }
  return {loglik, LogLikSource::ParticleFilter, false};
}

/// Averages n_replicates independent filter estimates in the linear domain
/// (log-mean-exp), which preserves unbiasedness and shrinks variance.
/// Replicates run on child streams spawned in replicate order and are
/// combined deterministically, so results do not depend on scheduling.
template <StateSpaceModel M>
LogLikEstimate averaged_loglik(const M& model, const TimeSeries& data,
                               const PfConfig& cfg, RngStream& rng) {
  if (cfg.n_replicates < 1)
    throw std::invalid_argument("averaged_loglik: need at least 1 replicate");
  if (cfg.n_replicates == 1)
    return bootstrap_loglik(model, data, cfg.n_particles, cfg.resampling, rng);

  std::vector<RngStream> streams;
  streams.reserve(cfg.n_replicates);
  for (std::size_t r = 0; r < cfg.n_replicates; ++r)
    streams.push_back(rng.spawn());

  std::vector<double> values(cfg.n_replicates);
  std::vector<bool> collapsed(cfg.n_replicates, false);
  const std::size_t workers = std::max<std::size_t>(1, cfg.workers);

  if (workers == 1) {
    for (std::size_t r = 0; r < cfg.n_replicates; ++r) {
      const auto est = bootstrap_loglik(model, data, cfg.n_particles,
                                        cfg.resampling, streams[r]);
      values[r] = est.value;
      collapsed[r] = est.collapsed;
    }
  } else {
    std::vector<std::future<LogLikEstimate>> futures;
    futures.reserve(cfg.n_replicates);
    for (std::size_t r = 0; r < cfg.n_replicates; ++r) {
      futures.push_back(std::async(std::launch::async, [&, r] {
        return bootstrap_loglik(model, data, cfg.n_particles, cfg.resampling,
                                streams[r]);
      }));
    }
    for (std::size_t r = 0; r < cfg.n_replicates; ++r) {
      const auto est = futures[r].get();
      values[r] = est.value;
      collapsed[r] = est.collapsed;
    }
  }

  bool all_collapsed = true;
  for (std::size_t r = 0; r < cfg.n_replicates; ++r)
    all_collapsed = all_collapsed && collapsed[r];
  return {log_mean_exp(values), LogLikSource::ParticleFilter, all_collapsed};
}

}  // namespace damcmc
