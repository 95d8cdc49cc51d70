#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "damcmc/core/diagnostics.hpp"
#include "damcmc/core/rng.hpp"
#include "damcmc/io/container.hpp"
#include "damcmc/io/csv.hpp"
#include "damcmc/models/dwp.hpp"
#include "damcmc/models/ricker.hpp"
#include "damcmc/pipeline/config.hpp"
#include "damcmc/pipeline/report.hpp"
#include "damcmc/samplers/delayed.hpp"
#include "damcmc/samplers/metropolis.hpp"
#include "damcmc/smc/bootstrap.hpp"

namespace damcmc {

namespace fs = std::filesystem;

using LikelihoodFn =
    std::function<LogLikEstimate(const ParameterPoint&, RngStream&)>;

inline PfConfig pf_config_of(const PipelineConfig& cfg) {
  PfConfig pf;
  pf.n_particles = cfg.n_particles;
  pf.n_replicates = cfg.n_replicates;
  pf.resampling = cfg.resampling == "multinomial" ? ResampleScheme::Multinomial
                                                  : ResampleScheme::Systematic;
  pf.euler_substeps = cfg.euler_substeps;
  pf.workers = cfg.workers;
  return pf;
}

/// Particle-filter-backed likelihood evaluator for the configured model.
inline LikelihoodFn make_likelihood(const PipelineConfig& cfg, TimeSeries data) {
  const PfConfig pf = pf_config_of(cfg);
  if (cfg.model == "ricker") {
    return [pf, data = std::move(data)](const ParameterPoint& theta,
                                        RngStream& rng) {
      const RickerModel m(RickerParams::from_point(theta));
      return averaged_loglik(m, data, pf, rng);
    };
  }
  const double A = cfg.dwp_A, g = cfg.dwp_g;
  return [pf, A, g, data = std::move(data)](const ParameterPoint& theta,
                                            RngStream& rng) {
    const DwpModel m(DwpParams::from_point(theta, A, g), pf.euler_substeps);
    return averaged_loglik(m, data, pf, rng);
  };
}

namespace detail {

inline void ensure_dir(const fs::path& dir) { fs::create_directories(dir); }

inline void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  f << j.dump(1) << '\n';
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path.string());
  nlohmann::json j;
  f >> j;
  return j;
}

inline nlohmann::json config_echo(const PipelineConfig& cfg) {
  return {{"model", cfg.model},
          {"seed", cfg.seed},
          {"data_T", cfg.data_T},
          {"n_particles", cfg.n_particles},
          {"n_replicates", cfg.n_replicates},
          {"beta_mh", cfg.beta_mh},
          {"wide_scale", cfg.wide_scale}};
}

}  // namespace detail

inline TimeSeries load_data(const PipelineConfig& cfg) {
  const fs::path dir(cfg.out_dir);
  double x0 = cfg.x0;
  const fs::path prov = dir / "data_provenance.json";
  if (fs::exists(prov)) x0 = detail::read_json(prov).value("x0", cfg.x0);
  return read_timeseries_csv(dir / "data.csv", x0);
}

/// simulate: draw a synthetic data set at the configured ground truth and
/// persist it together with a provenance sidecar.
inline fs::path cmd_simulate(const PipelineConfig& cfg, bool force = false) {
  cfg.validate();
  if (cfg.data_T == 0) throw std::invalid_argument("simulate: data_T must be >= 1");
  const fs::path dir(cfg.out_dir);
  detail::ensure_dir(dir);
  const fs::path data_path = dir / "data.csv";
  if (fs::exists(data_path) && !force)
    throw std::runtime_error("simulate: " + data_path.string() +
                             " exists; pass --force to overwrite");

  RngStream rng = make_stream(cfg.seed, StreamPurpose::DataSim);
  TimeSeries ts;
  if (cfg.model == "ricker") {
    RickerParams p{cfg.theta_true[0], cfg.theta_true[1], cfg.theta_true[2]};
    ts = simulate_ricker(p, cfg.data_T, cfg.x0, rng);
  } else {
    const DwpParams p =
        DwpParams::from_point(cfg.theta_true_point(), cfg.dwp_A, cfg.dwp_g);
    ts = dwp_simulate(p, cfg.data_T, cfg.dT, cfg.sim_substeps, cfg.x0, rng);
  }
  write_timeseries_csv(ts, data_path);
  detail::write_json({{"command", "simulate"},
                      {"model", cfg.model},
                      {"seed", cfg.seed},
                      {"theta_true", cfg.theta_true},
                      {"x0", cfg.x0},
                      {"dT", cfg.dT},
                      {"sim_substeps", cfg.sim_substeps},
                      {"dwp_A", cfg.dwp_A},
                      {"dwp_g", cfg.dwp_g}},
                     dir / "data_provenance.json");
  std::cout << "simulate: wrote " << ts.size() << " observations to "
            << data_path.string() << "\n";
  return data_path;
}

/// harvest: Markov-chain-within-Metropolis pre-run that records every
/// proposal with its estimated log-likelihood, and exports the adapted
/// proposal covariance plus the final chain state.
inline void cmd_harvest(const PipelineConfig& cfg) {
  cfg.validate();
  const fs::path dir(cfg.out_dir);
  detail::ensure_dir(dir);
  const TimeSeries data = load_data(cfg);
  auto lik = make_likelihood(cfg, data);

  McmcConfig mc;
  mc.iterations = cfg.harvest_iterations;
  mc.burnin = cfg.harvest_burnin;
  mc.theta0 = cfg.theta0_point();
  mc.target_rate = cfg.target_rate;
  StreamFamily streams(cfg.seed, 1);
  HarvestResult h = run_mcwm(lik, cfg.prior, mc, streams, true);

  write_training_csv(h.training, dir / "training.csv");
  write_chain_csv(h.chain, parameter_names(cfg), dir / "harvest_chain.csv");

  // divergence warning: acceptance over the last 1000 iterations
  std::string warning;
  if (h.chain.size() >= 1000) {
    std::size_t acc = 0;
    for (std::size_t i = h.chain.size() - 1000; i < h.chain.size(); ++i)
      acc += h.chain.events[i].accepted ? 1 : 0;
    if (acc < 10)
      warning = "acceptance below 1% over the last 1000 iterations; the "
                "harvest chain may not have reached the posterior bulk";
  }

  RunReport rep = compute_report(h.chain, "mcwm-harvest", cfg.model,
                                 parameter_names(cfg), cfg.harvest_burnin);
  nlohmann::json rj = report_to_json(rep);
  rj["config"] = detail::config_echo(cfg);
  if (!warning.empty()) rj["warning"] = warning;
  detail::write_json(rj, dir / "harvest_report.json");

  detail::write_json(
      {{"proposal_covariance", detail::matrix_to_json(h.final_proposal_covariance)},
       {"final_theta", std::vector<double>(h.chain.samples.back().data(),
                                           h.chain.samples.back().data() +
                                               h.chain.samples.back().size())},
       {"rows", h.training.size()}},
      dir / "harvest_state.json");
  std::cout << "harvest: " << h.training.size() << " training rows, acceptance "
            << rep.acceptance_pct << "%\n";
  if (!warning.empty()) std::cout << "harvest: WARNING: " << warning << "\n";
}

struct FitSummary {
  Eigen::Index rows_used = 0;
  double gp_heldout_rmse = 0.0;
  bool rmse_warning = false;
  double coin_p1 = 0.0, coin_p2 = 0.0;
  std::array<std::size_t, 4> label_counts{};
  std::array<double, 4> assumption_holds_pct{};
};

/// fit: trim the harvest, fit the surrogate, label the four cases, fit the
/// selection model, and persist everything as one versioned container.
inline FitSummary cmd_fit(const PipelineConfig& cfg) {
  cfg.validate();
  const fs::path dir(cfg.out_dir);
  TrainingDataset raw = read_training_csv(dir / "training.csv", cfg.dimension());
  raw = drop_nonfinite_rows(raw);
  TrainingDataset trimmed = trim_training_data(raw, cfg.trim_fraction);
  if (trimmed.size() < 30)
    throw std::runtime_error("fit: too few usable training rows; harvest longer");

  // hold out every tenth row for an honest fit check, then condition the
  // final surrogate on the full trimmed set at the chosen kernel parameters
  std::vector<Eigen::Index> hold, train;
  for (Eigen::Index i = 0; i < trimmed.size(); ++i)
    (i % 10 == 9 ? hold : train).push_back(i);
  TrainingDataset fitset;
  fitset.proposals.resize(static_cast<Eigen::Index>(train.size()), trimmed.dimension());
  fitset.logliks.resize(static_cast<Eigen::Index>(train.size()));
  for (std::size_t k = 0; k < train.size(); ++k) {
    fitset.proposals.row(static_cast<Eigen::Index>(k)) = trimmed.proposals.row(train[k]);
    fitset.logliks[static_cast<Eigen::Index>(k)] = trimmed.logliks[train[k]];
  }
  GpFitOptions opts;
  opts.seed = cfg.seed;
  const GpModel gp_train = GpModel::fit(fitset, opts);

  double sse = 0.0;
  for (Eigen::Index i : hold) {
    const double err =
        gp_train.predict(trimmed.proposals.row(i).transpose()).mean -
        trimmed.logliks[i];
    sse += err * err;
  }
  FitSummary summary;
  summary.rows_used = trimmed.size();
  summary.gp_heldout_rmse =
      hold.empty() ? 0.0 : std::sqrt(sse / static_cast<double>(hold.size()));
  summary.rmse_warning = summary.gp_heldout_rmse > cfg.gp_rmse_warn;

  const GpModel gp = GpModel::with_hyperparams(
      trimmed, gp_train.hyperparams().signal_variance,
      gp_train.hyperparams().length_scales,
      gp_train.hyperparams().nugget_variance);

  RngStream label_rng = make_stream(cfg.seed, StreamPurpose::CaseSelection, 2);
  const LabeledCases labels = label_training_cases(trimmed, gp, label_rng);
  for (CaseLabel c : labels.labels)
    summary.label_counts[static_cast<std::size_t>(c) - 1] += 1;

  const CaseSelector coin = fit_biased_coin(labels);
  summary.coin_p1 = coin.coin_p1();
  summary.coin_p2 = coin.coin_p2();

  CaseSelector selector = coin;
  if (cfg.selector == "logistic")
    selector = fit_logistic(labels);
  else if (cfg.selector == "tree")
    selector = fit_tree(labels);

  // training-set analog of the "assumption holds" table: how often the
  // selected case matches the labeled one, per selected case
  std::array<std::size_t, 4> sel_count{}, sel_hit{};
  const Eigen::Index d = labels.theta_dimension();
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    SelectionContext ctx;
    ctx.theta_star = labels.features.row(i).head(d).transpose();
    ctx.theta_prev = ctx.theta_star;
    ctx.gp_log_ratio_star_minus_prev = labels.features(i, d);
    ctx.gp_star_higher = labels.features(i, d) > 0.0;
    const CaseLabel sel = selector.select(ctx, label_rng);
    const auto k = static_cast<std::size_t>(sel) - 1;
    sel_count[k] += 1;
    if (sel == labels.labels[static_cast<std::size_t>(i)]) sel_hit[k] += 1;
  }
  for (std::size_t k = 0; k < 4; ++k)
    summary.assumption_holds_pct[k] =
        sel_count[k] ? 100.0 * static_cast<double>(sel_hit[k]) /
                           static_cast<double>(sel_count[k])
                     : 0.0;

  save_model_container({gp, selector}, dir / "model.json");
  detail::write_json(
      {{"rows_used", summary.rows_used},
       {"trim_fraction", cfg.trim_fraction},
       {"gp_heldout_rmse", summary.gp_heldout_rmse},
       {"gp_rmse_warning", summary.rmse_warning},
       {"gp_signal_variance", gp.hyperparams().signal_variance},
       {"gp_nugget_variance", gp.hyperparams().nugget_variance},
       {"gp_length_scales", detail::vector_to_json(gp.hyperparams().length_scales)},
       {"selector", cfg.selector},
       {"coin_p", {summary.coin_p1, summary.coin_p2, 1.0 - summary.coin_p1,
                   1.0 - summary.coin_p2}},
       {"label_counts", summary.label_counts},
       {"assumption_holds_pct", summary.assumption_holds_pct},
       {"config", detail::config_echo(cfg)}},
      dir / "fit_report.json");
  std::cout << "fit: " << summary.rows_used << " rows, held-out RMSE "
            << summary.gp_heldout_rmse << (summary.rmse_warning ? " (WARNING: above threshold)" : "")
            << ", coin p = [" << summary.coin_p1 << ", " << summary.coin_p2
            << ", " << 1.0 - summary.coin_p1 << ", " << 1.0 - summary.coin_p2
            << "]\n";
  return summary;
}

/// run: execute one sampler and write its chain, report, and plot-ready
/// marginal densities.
inline RunReport cmd_run(const PipelineConfig& cfg, const std::string& algorithm) {
  cfg.validate();
  const fs::path dir(cfg.out_dir);
  const TimeSeries data = load_data(cfg);
  auto lik = make_likelihood(cfg, data);

  ChainResult chain;
  if (algorithm == "pmcmc" || algorithm == "mcwm") {
    McmcConfig mc;
    mc.iterations = cfg.iterations;
    mc.burnin = cfg.burnin;
    mc.theta0 = cfg.theta0_point();
    mc.target_rate = cfg.target_rate;
    StreamFamily streams(cfg.seed, algorithm == "pmcmc" ? 5 : 6);
    if (algorithm == "pmcmc")
      chain = run_pmcmc(lik, cfg.prior, mc, streams);
    else
      chain = run_mcwm(lik, cfg.prior, mc, streams, false).chain;
  } else if (algorithm == "da" || algorithm == "ada") {
    const fs::path state_path = dir / "harvest_state.json";
    if (!fs::exists(state_path))
      throw std::runtime_error("run " + algorithm +
                               ": missing harvest output; run `harvest` first");
    const fs::path model_path = dir / "model.json";
    if (!fs::exists(model_path))
      throw std::runtime_error("run " + algorithm +
                               ": missing fitted model; run `fit` first");
    const nlohmann::json state = detail::read_json(state_path);
    const ModelContainer mc_loaded = load_model_container(model_path);

    DaConfig dc;
    dc.iterations = cfg.iterations;
    dc.burnin = cfg.burnin;
    const auto t0 = state.at("final_theta").get<std::vector<double>>();
    dc.theta0 = Eigen::Map<const Eigen::VectorXd>(t0.data(),
                                                  static_cast<Eigen::Index>(t0.size()));
    dc.base_covariance = detail::matrix_from_json(state.at("proposal_covariance"));
    dc.wide_scale = cfg.wide_scale;
    dc.beta_mh = cfg.beta_mh;
    dc.refresh_second_stage = cfg.refresh_second_stage;

    const GpSurrogate surrogate(mc_loaded.gp);
    StreamFamily streams(cfg.seed, algorithm == "da" ? 3 : 4);
    if (algorithm == "da")
      chain = run_da(surrogate, lik, cfg.prior, dc, streams);
    else
      chain = run_ada(surrogate, lik, mc_loaded.selector, cfg.prior, dc, streams);
  } else {
    throw std::invalid_argument("run: unknown algorithm '" + algorithm +
                                "' (expected pmcmc|mcwm|da|ada)");
  }

  const auto names = parameter_names(cfg);
  write_chain_csv(chain, names, dir / (algorithm + "_chain.csv"));
  RunReport rep = compute_report(chain, algorithm, cfg.model, names, cfg.burnin);
  nlohmann::json rj = report_to_json(rep);
  rj["config"] = detail::config_echo(cfg);
  detail::write_json(rj, dir / (algorithm + "_report.json"));

  // plot-ready marginal densities over the post-burnin slice
  if (chain.size() > cfg.burnin + 10) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      std::vector<double> coord;
      for (std::size_t i = cfg.burnin; i < chain.size(); ++i)
        coord.push_back(chain.samples[i][static_cast<Eigen::Index>(j)]);
      const DensityGrid g = kde_grid(coord);
      std::ofstream f(dir / (algorithm + "_density_" + names[j] + ".csv"));
      f << "x,density\n";
      for (std::size_t i = 0; i < g.x.size(); ++i)
        f << damcmc::detail::fmt_double(g.x[i]) << ','
          << damcmc::detail::fmt_double(g.density[i]) << '\n';
    }
  }
  std::cout << "run " << algorithm << ": acceptance " << rep.acceptance_pct
            << "%, min ESS " << rep.min_ess << ", " << rep.seconds_per_1000
            << " s/1000 iterations\n";
  return rep;
}

/// compare: aggregate two or more run reports into speed-up and
/// particle-filter-reduction summaries (first argument is the baseline).
inline nlohmann::json cmd_compare(const std::vector<fs::path>& inputs,
                                  const fs::path& out_path) {
  std::vector<fs::path> files;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        const std::string name = e.path().filename().string();
        if (name.size() > 12 &&
            name.substr(name.size() - 12) == "_report.json" &&
            name.find("harvest") == std::string::npos)
          files.push_back(e.path());
      }
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.size() < 2)
    throw std::invalid_argument("compare: need at least 2 run reports");

  std::vector<nlohmann::json> raw;
  std::vector<RunReport> reps;
  for (const auto& f : files) {
    raw.push_back(detail::read_json(f));
    reps.push_back(report_from_json(raw.back()));
  }

  // config compatibility across runs
  const std::vector<std::string> keys = {"model", "data_T", "n_particles",
                                         "n_replicates"};
  std::vector<std::string> mismatched;
  for (const auto& k : keys) {
    for (std::size_t i = 1; i < raw.size(); ++i) {
      if (raw[i].value("config", nlohmann::json::object()).value(k, nlohmann::json()) !=
          raw[0].value("config", nlohmann::json::object()).value(k, nlohmann::json())) {
        mismatched.push_back(k);
        break;
      }
    }
  }
  if (!mismatched.empty()) {
    std::string msg = "compare: incompatible run configs; mismatched fields:";
    for (const auto& k : mismatched) msg += " " + k;
    throw std::runtime_error(msg);
  }

  nlohmann::json out;
  out["baseline"] = reps[0].algorithm;
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const double speedup = reps[i].wall_seconds > 0
                               ? reps[0].wall_seconds / reps[i].wall_seconds
                               : 0.0;
    const double pf_reduction =
        reps[i].second_stage_pf_calls > 0
            ? static_cast<double>(reps[0].second_stage_pf_calls) /
                  static_cast<double>(reps[i].second_stage_pf_calls)
            : 0.0;
    runs.push_back({{"algorithm", reps[i].algorithm},
                    {"file", files[i].string()},
                    {"seconds_per_1000_iterations", reps[i].seconds_per_1000},
                    {"acceptance_pct", reps[i].acceptance_pct},
                    {"min_ess_per_sec", reps[i].min_ess_per_sec},
                    {"early_rejection_pct", reps[i].early_rejection_pct},
                    {"second_stage_pf_calls", reps[i].second_stage_pf_calls},
                    {"speedup_vs_baseline", speedup},
                    {"pf_reduction_vs_baseline", pf_reduction}});
  }
  out["runs"] = runs;
  detail::write_json(out, out_path);

  std::ofstream csv(out_path.parent_path() / "compare.csv");
  csv << "algorithm,seconds_per_1000,acceptance_pct,min_ess_per_sec,"
         "early_rejection_pct,second_stage_pf_calls,speedup_vs_baseline,"
         "pf_reduction_vs_baseline\n";
  for (const auto& r : runs) {
    csv << r.at("algorithm").get<std::string>() << ','
        << r.at("seconds_per_1000_iterations").get<double>() << ','
        << r.at("acceptance_pct").get<double>() << ','
        << r.at("min_ess_per_sec").get<double>() << ','
        << r.at("early_rejection_pct").get<double>() << ','
        << r.at("second_stage_pf_calls").get<std::size_t>() << ','
        << r.at("speedup_vs_baseline").get<double>() << ','
        << r.at("pf_reduction_vs_baseline").get<double>() << '\n';
  }
  std::cout << "compare: wrote " << out_path.string() << "\n";
  return out;
}

/// predict: forward-simulate from parameters drawn uniformly from the
/// top-half (by log-likelihood) of a chain; emits trajectories, a pooled
/// marginal density, and regime-switch counts.
inline void cmd_predict(const PipelineConfig& cfg, const fs::path& chain_path) {
  cfg.validate();
  const fs::path dir(cfg.out_dir);
  const ChainResult chain = read_chain_csv(chain_path, cfg.dimension());
  if (chain.size() == 0) throw std::runtime_error("predict: empty chain");

  const std::size_t start = chain.size() > cfg.burnin ? cfg.burnin : 0;
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = start; i < chain.size(); ++i)
    scored.emplace_back(chain.logliks[i].value, i);
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  scored.resize(std::max<std::size_t>(1, scored.size() / 2));  // top 50%

  RngStream rng = make_stream(cfg.seed, StreamPurpose::DataSim, 7);
  std::ofstream traj(dir / "predictive_trajectories.csv");
  traj << "draw,time,value\n";
  std::vector<double> pooled;
  nlohmann::json per_draw = nlohmann::json::array();
  for (std::size_t k = 0; k < cfg.predict_draws; ++k) {
    const std::size_t pick = scored[static_cast<std::size_t>(
                                        rng.below(scored.size()))]
                                 .second;
    const ParameterPoint theta = chain.samples[pick];
    RngStream sim = rng.spawn();
    TimeSeries ts;
    if (cfg.model == "ricker") {
      RickerParams p{theta[0], theta[1], theta[2]};
      ts = simulate_ricker(p, cfg.data_T, cfg.x0, sim);
    } else {
      const DwpParams p = DwpParams::from_point(theta, cfg.dwp_A, cfg.dwp_g);
      ts = dwp_simulate(p, cfg.data_T, cfg.dT, cfg.sim_substeps, cfg.x0, sim);
    }
    for (std::size_t t = 0; t < ts.size(); ++t) {
      traj << k << ',' << damcmc::detail::fmt_double(ts.times[t]) << ','
           << damcmc::detail::fmt_double(ts.values[t]) << '\n';
      pooled.push_back(ts.values[t]);
    }
    nlohmann::json dj = {{"draw", k}, {"chain_row", pick}};
    if (cfg.model == "dwp-sde") {
      // regime switches: sign crossings of the well midpoint c
      const double c_mid = std::exp(theta[2]);
      int crossings = 0;
      for (std::size_t t = 1; t < ts.size(); ++t)
        if ((ts.values[t] - c_mid) * (ts.values[t - 1] - c_mid) < 0.0) ++crossings;
      dj["regime_switches"] = crossings;
    }
    per_draw.push_back(dj);
  }

  const DensityGrid g = kde_grid(pooled);
  std::ofstream dens(dir / "predictive_density.csv");
  dens << "x,density\n";
  for (std::size_t i = 0; i < g.x.size(); ++i)
    dens << damcmc::detail::fmt_double(g.x[i]) << ','
         << damcmc::detail::fmt_double(g.density[i]) << '\n';

  detail::write_json({{"draws", per_draw},
                      {"pooled_mean", sample_mean(pooled)},
                      {"pooled_sd", std::sqrt(sample_variance(pooled))},
                      {"source_chain", chain_path.string()}},
                     dir / "predictive_summary.json");
  std::cout << "predict: " << cfg.predict_draws << " forward simulations from "
            << chain_path.string() << "\n";
}

/// pipeline: simulate -> harvest -> fit -> run da -> run ada.
inline void cmd_pipeline(const PipelineConfig& cfg, bool force = false) {
  cmd_simulate(cfg, force);
  cmd_harvest(cfg);
  cmd_fit(cfg);
  cmd_run(cfg, "da");
  cmd_run(cfg, "ada");
}

}  // namespace damcmc
