#pragma once

#include <chrono>
#include <concepts>
#include <optional>
#include <stdexcept>
#include <type_traits>

#include "damcmc/caseselect/selector.hpp"
#include "damcmc/core/logmath.hpp"
#include "damcmc/core/rng.hpp"
#include "damcmc/core/types.hpp"
#include "damcmc/models/prior.hpp"
#include "damcmc/samplers/metropolis.hpp"
#include "damcmc/samplers/proposal.hpp"

namespace damcmc {

/// A surrogate draw source: stochastic (GP predictive) or deterministic.
template <typename F>
concept SurrogateDraw = LogLikEvaluator<F>;

struct DaConfig {
  std::size_t iterations = 10000;
  std::size_t burnin = 0;
  ParameterPoint theta0;
  Eigen::MatrixXd base_covariance;  // Sigma for the narrow kernel g~
  double wide_scale = 1.25;         // g uses (wide_scale^2) * Sigma
  double beta_mh = 0.15;            // probability of a plain MH step
  bool refresh_second_stage = true;

  void validate() const {
    if (!(wide_scale >= 1.0))
      throw std::invalid_argument("da: wide_scale must be >= 1");
    if (!(beta_mh >= 0.0 && beta_mh <= 1.0))
      throw std::invalid_argument("da: beta_mh must be in [0,1]");
    if (base_covariance.rows() == 0)
      throw std::invalid_argument("da: base covariance not set");
  }
};

struct SecondStageDecision {
  bool accepted = false;
  bool pf_called = false;
  bool early = false;  // decided without the expensive likelihood
};

/// Second-stage decision of the accelerated scheme for one selected case.
/// `u` is the single second-stage uniform; `gp_log_ratio_prev_minus_star` is
/// log of the surrogate ratio L~(prev)/L~(star); `pf_log_ratio` lazily
/// computes log of the expensive ratio L(star)/L(prev) and is invoked at
/// most once.
///
/// Case 1: early-accept when u falls below the surrogate ratio, otherwise
///         the expensive ratio decides with the same u.
/// Case 2: no shortcut; the expensive ratio always decides.
/// Case 3: early-reject when u falls above the surrogate ratio, otherwise
///         the expensive ratio decides.
/// Case 4: accept outright, no expensive evaluation.
template <typename Provider>
  requires std::is_invocable_r_v<double, Provider>
SecondStageDecision ada_second_stage(CaseLabel selected, double u,
                                     double gp_log_ratio_prev_minus_star,
                                     Provider&& pf_log_ratio) {
  const double gp_ratio = gp_log_ratio_prev_minus_star;
  switch (selected) {
    case CaseLabel::Case1: {
      if (mh_accept(gp_ratio, u)) return {true, false, true};
      const double full = pf_log_ratio() + gp_ratio;
      return {mh_accept(full, u), true, false};
    }
    case CaseLabel::Case2: {
      const double full = pf_log_ratio() + gp_ratio;
      return {mh_accept(full, u), true, false};
    }
    case CaseLabel::Case3: {
      if (!mh_accept(gp_ratio, u)) return {false, false, true};
      const double full = pf_log_ratio() + gp_ratio;
      return {mh_accept(full, u), true, false};
    }
    case CaseLabel::Case4:
      return {true, false, true};
  }
  throw std::logic_error("ada_second_stage: bad case label");
}

namespace detail {

struct NoSelector {};

/// Shared driver for the two-stage schemes. With a selector the second stage
/// runs the accelerated case logic; without one it always evaluates the
/// expensive likelihood. Stream usage on the shared streams is identical in
/// both modes, which is what makes chains comparable draw-for-draw.
template <typename Surrogate, typename Lik, typename Sel>
ChainResult run_delayed(Surrogate&& surrogate, Lik&& lik, const Sel* selector,
                        const PriorSpec& prior, const DaConfig& cfg,
                        StreamFamily& streams) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  const GaussianProposal narrow(cfg.base_covariance, 1.0);
  const GaussianProposal wide(cfg.base_covariance, cfg.wide_scale);

  ParameterPoint theta = cfg.theta0;
  double lp = eval_log_prior(theta, prior);
  std::optional<LogLikEstimate> stored = lik(theta, streams.particle_filter);
  check_start(theta, lp, *stored);
  LogLikEstimate last_record = *stored;

  ChainResult out;
  out.samples.reserve(cfg.iterations);

  // Ensures a usable estimate for the retained point, lazily restoring it
  // after early-accepts left it unknown.
  auto denominator = [&](IterationEvent& ev) -> double {
    if (cfg.refresh_second_stage || !stored) {
      stored = lik(theta, streams.particle_filter);
      ++ev.pf_calls;
    }
    return stored->value;
  };

  for (std::size_t r = 0; r < cfg.iterations; ++r) {
    IterationEvent ev;
    const double u_branch = streams.stage_decision.uniform01();

    if (u_branch < cfg.beta_mh) {
      // plain Metropolis-Hastings detour with the narrow kernel
      ev.used_mh_branch = true;
      const ParameterPoint star = narrow.sample(theta, streams.proposal);
      const double lp_star = eval_log_prior(star, prior);
      const double u = streams.stage_decision.uniform01();
      if (lp_star > kNegInf) {
        if (!stored) {
          stored = lik(theta, streams.particle_filter);
          ++ev.pf_calls;
        }
        const LogLikEstimate ll_star = lik(star, streams.particle_filter);
        ++ev.pf_calls;
        const double log_ratio =
            safe_log_lik_ratio(ll_star.value, stored->value) + (lp_star - lp);
        if (mh_accept(log_ratio, u)) {
          ev.accepted = true;
          theta = star;
          lp = lp_star;
          stored = ll_star;
          last_record = ll_star;
        }
      }
    } else {
      // two-stage scheme with the wide kernel
      const ParameterPoint star = wide.sample(theta, streams.proposal);
      const LogLikEstimate gp_star = surrogate(star, streams.gp_draw);
      const LogLikEstimate gp_prev = surrogate(theta, streams.gp_draw);
      const double lp_star = eval_log_prior(star, prior);

      const double log_alpha1 =
          (gp_star.value - gp_prev.value) + (lp_star - lp);
      const double u1 = streams.stage_decision.uniform01();
      if (mh_accept(log_alpha1, u1)) {
        ev.stage1_passed = true;
        const double u2 = streams.stage_decision.uniform01();
        const double gp_ratio = gp_prev.value - gp_star.value;

        std::optional<LogLikEstimate> ll_star;
        auto pf_log_ratio = [&]() -> double {
          ll_star = lik(star, streams.particle_filter);
          ++ev.pf_calls;
          const double den = denominator(ev);
          return safe_log_lik_ratio(ll_star->value, den);
        };

        SecondStageDecision decision;
        if constexpr (std::is_same_v<Sel, NoSelector>) {
          decision.accepted = mh_accept(pf_log_ratio() + gp_ratio, u2);
          decision.pf_called = true;
        } else {
          SelectionContext ctx;
          ctx.theta_star = star;
          ctx.theta_prev = theta;
          ctx.gp_log_ratio_star_minus_prev = gp_star.value - gp_prev.value;
          ctx.gp_star_higher = gp_star.value > gp_prev.value;
          const CaseLabel selected =
              selector->select(ctx, streams.case_selection);
          ev.selected_case = selected;
          decision = ada_second_stage(selected, u2, gp_ratio, pf_log_ratio);
        }

        if (decision.accepted) {
          ev.accepted = true;
          ev.early_accepted = decision.early;
          theta = star;
          lp = lp_star;
          if (ll_star) {
            stored = *ll_star;
            last_record = *ll_star;
          } else {
            // early-accepted: no expensive value exists for the new state
            stored.reset();
            last_record = gp_star;
          }
        }
      }
    }
    out.samples.push_back(theta);
    out.logliks.push_back(last_record);
    out.events.push_back(ev);
  }
  out.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
  return out;
}

}  // namespace detail

/// Two-stage delayed-acceptance run: the surrogate screens proposals at
/// stage 1, the expensive likelihood corrects at stage 2.
template <SurrogateDraw Surrogate, LogLikEvaluator Lik>
ChainResult run_da(Surrogate&& surrogate, Lik&& lik, const PriorSpec& prior,
                   const DaConfig& cfg, StreamFamily& streams) {
  return detail::run_delayed(std::forward<Surrogate>(surrogate),
                             std::forward<Lik>(lik),
                             static_cast<const detail::NoSelector*>(nullptr),
                             prior, cfg, streams);
}

/// Accelerated variant: a case-selection model decides which ordering to
/// assume at stage 2, opening early-accept/early-reject shortcuts that skip
/// the expensive likelihood.
template <SurrogateDraw Surrogate, LogLikEvaluator Lik>
ChainResult run_ada(Surrogate&& surrogate, Lik&& lik,
                    const CaseSelector& selector, const PriorSpec& prior,
                    const DaConfig& cfg, StreamFamily& streams) {
  return detail::run_delayed(std::forward<Surrogate>(surrogate),
                             std::forward<Lik>(lik), &selector, prior, cfg,
                             streams);
}

}  // namespace damcmc
