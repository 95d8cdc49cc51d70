#pragma once

#include <chrono>
#include <concepts>
#include <optional>
#include <stdexcept>

#include "damcmc/core/logmath.hpp"
#include "damcmc/core/rng.hpp"
#include "damcmc/core/types.hpp"
#include "damcmc/models/prior.hpp"
#include "damcmc/samplers/adapt.hpp"
#include "damcmc/samplers/proposal.hpp"
#include "damcmc/surrogate/dataset.hpp"

namespace damcmc {

/// Anything that can estimate (or evaluate) a log-likelihood at a point.
template <typename F>
concept LogLikEvaluator = requires(F f, const ParameterPoint& theta, RngStream& rng) {
  { f(theta, rng) } -> std::convertible_to<LogLikEstimate>;
};

struct McmcConfig {
  std::size_t iterations = 10000;
  std::size_t burnin = 0;
  ParameterPoint theta0;
  double target_rate = 0.40;
  double initial_scale = -1.0;  // <= 0: 2.38/sqrt(d)
  bool adapt = true;
};

struct HarvestResult {
  ChainResult chain;
  TrainingDataset training;        // post-burnin proposals, all of them
  Eigen::MatrixXd final_proposal_covariance;  // scale folded in
};

namespace detail {

inline void check_start(const ParameterPoint& theta0, double log_prior,
                        const LogLikEstimate& ll) {
  if (!all_finite(theta0))
    throw std::invalid_argument("mcmc: non-finite start point");
  if (log_prior == kNegInf)
    throw std::invalid_argument("mcmc: start point has zero prior density");
  if (ll.value == kNegInf)
    throw std::runtime_error(
        "mcmc: start point has -inf estimated log-likelihood; choose a "
        "different start");
}

}  // namespace detail

/// Pseudo-marginal Metropolis-Hastings: the estimate attached to the
/// retained point is stored and reused, never refreshed.
template <LogLikEvaluator Lik>
ChainResult run_pmcmc(Lik&& lik, const PriorSpec& prior, const McmcConfig& cfg,
                      StreamFamily& streams) {
  const auto t_start = std::chrono::steady_clock::now();
  ParameterPoint theta = cfg.theta0;
  double lp = eval_log_prior(theta, prior);
  LogLikEstimate ll = lik(theta, streams.particle_filter);
  detail::check_start(theta, lp, ll);

  AmState am(static_cast<int>(theta.size()), cfg.target_rate, cfg.initial_scale);
  ChainResult out;
  out.samples.reserve(cfg.iterations);

  for (std::size_t r = 0; r < cfg.iterations; ++r) {
    IterationEvent ev;
    const GaussianProposal kernel(am.proposal_covariance());
    const ParameterPoint star = kernel.sample(theta, streams.proposal);
    const double lp_star = eval_log_prior(star, prior);
    bool accepted = false;
    if (lp_star > kNegInf) {
      const LogLikEstimate ll_star = lik(star, streams.particle_filter);
      ev.pf_calls = 1;
      const double log_ratio =
          safe_log_lik_ratio(ll_star.value, ll.value) + (lp_star - lp);
      const double u = streams.stage_decision.uniform01();
      if (mh_accept(log_ratio, u)) {
        accepted = true;
        theta = star;
        lp = lp_star;
        ll = ll_star;
      }
    } else {
      streams.stage_decision.uniform01();  // keep stream use uniform per iteration
    }
    ev.accepted = accepted;
    if (cfg.adapt) am.adapt(accepted, theta);
    out.samples.push_back(theta);
    out.logliks.push_back(ll);
    out.events.push_back(ev);
  }
  out.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
  return out;
}

/// Markov-chain-within-Metropolis: both the current and the proposed
/// log-likelihood are re-estimated every iteration. In harvest mode every
/// post-burnin proposal is recorded (accepted or not) together with the
/// freshly estimated value at the chain state it competed against, and the
/// final adapted kernel covariance is exported.
template <LogLikEvaluator Lik>
HarvestResult run_mcwm(Lik&& lik, const PriorSpec& prior, const McmcConfig& cfg,
                       StreamFamily& streams, bool harvest) {
  const auto t_start = std::chrono::steady_clock::now();
  ParameterPoint theta = cfg.theta0;
  const int d = static_cast<int>(theta.size());
  double lp = eval_log_prior(theta, prior);
  {
    const LogLikEstimate ll0 = lik(theta, streams.particle_filter);
    detail::check_start(theta, lp, ll0);
  }

  AmState am(d, cfg.target_rate, cfg.initial_scale);
  HarvestResult out;
  out.chain.samples.reserve(cfg.iterations);

  const std::size_t n_harvest =
      harvest && cfg.iterations > cfg.burnin ? cfg.iterations - cfg.burnin : 0;
  if (harvest && n_harvest == 0)
    throw std::invalid_argument("mcwm harvest: no post-burnin iterations");
  Eigen::MatrixXd D(n_harvest, d), Dt(n_harvest, d);
  Eigen::VectorXd Dy(n_harvest), Dty(n_harvest);
  std::size_t row = 0;

  for (std::size_t r = 0; r < cfg.iterations; ++r) {
    IterationEvent ev;
    const GaussianProposal kernel(am.proposal_covariance());
    const ParameterPoint star = kernel.sample(theta, streams.proposal);
    const double lp_star = eval_log_prior(star, prior);

    // fresh estimates at both points, every iteration
    const LogLikEstimate ll_prev = lik(theta, streams.particle_filter);
    const LogLikEstimate ll_star = lik(star, streams.particle_filter);
    ev.pf_calls = 2;

    bool accepted = false;
    if (lp_star > kNegInf) {
      const double log_ratio =
          safe_log_lik_ratio(ll_star.value, ll_prev.value) + (lp_star - lp);
      const double u = streams.stage_decision.uniform01();
      accepted = mh_accept(log_ratio, u);
    } else {
      streams.stage_decision.uniform01();
    }

    if (harvest && r >= cfg.burnin) {
      D.row(static_cast<Eigen::Index>(row)) = star.transpose();
      Dy[static_cast<Eigen::Index>(row)] = ll_star.value;
      Dt.row(static_cast<Eigen::Index>(row)) = theta.transpose();
      Dty[static_cast<Eigen::Index>(row)] = ll_prev.value;
      ++row;
    }

    if (accepted) {
      theta = star;
      lp = lp_star;
    }
    ev.accepted = accepted;
    if (cfg.adapt) am.adapt(accepted, theta);
    out.chain.samples.push_back(theta);
    out.chain.logliks.push_back(accepted ? ll_star : ll_prev);
    out.chain.events.push_back(ev);
  }

  am.freeze();
  out.final_proposal_covariance = am.proposal_covariance();
  out.training.proposals = std::move(D);
  out.training.logliks = std::move(Dy);
  out.training.chain_thetas = std::move(Dt);
  out.training.chain_logliks = std::move(Dty);
  out.training.has_chain_aligned = n_harvest > 0;
  out.chain.wall_seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - t_start)
                               .count();
  return out;
}

}  // namespace damcmc
