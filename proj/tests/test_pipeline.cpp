#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "damcmc/io/csv.hpp"
#include "damcmc/pipeline/commands.hpp"
#include "damcmc/pipeline/config.hpp"
#include "damcmc/pipeline/report.hpp"

using namespace damcmc;
namespace fsys = std::filesystem;

namespace {

std::string slurp(const fsys::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Desk-size Ricker configuration that runs the whole pipeline in seconds.
PipelineConfig tiny_ricker(const std::string& dir) {
  PipelineConfig cfg = default_ricker_config();
  cfg.out_dir = dir;
  cfg.seed = 4242;
  cfg.data_T = 25;
  cfg.n_particles = 60;
  cfg.harvest_iterations = 420;
  cfg.harvest_burnin = 120;
  cfg.iterations = 400;
  cfg.burnin = 100;
  cfg.theta0 = {3.5, 2.0, -1.0};  // near the truth so tiny runs stay stable
  cfg.selector = "tree";
  return cfg;
}

struct TempDir {
  fsys::path path;
  explicit TempDir(const std::string& name)
      : path(fsys::temp_directory_path() / name) {
    fsys::remove_all(path);
    fsys::create_directories(path);
  }
  ~TempDir() { fsys::remove_all(path); }
};

}  // namespace

TEST_CASE("timeseries CSV round trip") {
  TempDir tmp("damcmc_ts_csv");
  TimeSeries ts;
  ts.x0 = 7.0;
  ts.times = {1.0, 2.0, 3.0};
  ts.values = {0.5, 123456.75, 1e-17};
  write_timeseries_csv(ts, tmp.path / "d.csv");
  const TimeSeries back = read_timeseries_csv(tmp.path / "d.csv", 7.0);
  REQUIRE(back.times == ts.times);
  REQUIRE(back.values == ts.values);
  REQUIRE(back.x0 == 7.0);
}

TEST_CASE("chain CSV round trip preserves events exactly") {
  TempDir tmp("damcmc_chain_csv");
  ChainResult chain;
  RngStream rng(1, 1);
  for (int i = 0; i < 50; ++i) {
    ParameterPoint p(2);
    p << rng.normal(), rng.normal();
    chain.samples.push_back(p);
    chain.logliks.push_back({rng.normal(-100.0, 10.0),
                             i % 3 == 0 ? LogLikSource::GpDraw
                                        : LogLikSource::ParticleFilter,
                             false});
    IterationEvent ev;
    ev.used_mh_branch = i % 7 == 0;
    ev.stage1_passed = !ev.used_mh_branch && i % 2 == 0;
    if (ev.stage1_passed && i % 4 == 0) ev.selected_case = CaseLabel::Case3;
    ev.pf_calls = i % 3;
    ev.accepted = i % 5 == 0;
    chain.events.push_back(ev);
  }
  write_chain_csv(chain, {"a", "b"}, tmp.path / "chain.csv");
  const ChainResult back = read_chain_csv(tmp.path / "chain.csv", 2);
  REQUIRE(back.size() == chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    REQUIRE(back.samples[i] == chain.samples[i]);
    REQUIRE(back.logliks[i].value == chain.logliks[i].value);
    REQUIRE(back.logliks[i].source == chain.logliks[i].source);
    REQUIRE(back.events[i].used_mh_branch == chain.events[i].used_mh_branch);
    REQUIRE(back.events[i].stage1_passed == chain.events[i].stage1_passed);
    REQUIRE(back.events[i].selected_case == chain.events[i].selected_case);
    REQUIRE(back.events[i].pf_calls == chain.events[i].pf_calls);
    REQUIRE(back.events[i].accepted == chain.events[i].accepted);
  }
}

TEST_CASE("training CSV round trip") {
  TempDir tmp("damcmc_training_csv");
  TrainingDataset d;
  RngStream rng(2, 2);
  d.proposals.resize(20, 3);
  d.logliks.resize(20);
  d.chain_thetas.resize(20, 3);
  d.chain_logliks.resize(20);
  d.has_chain_aligned = true;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 3; ++j) {
      d.proposals(i, j) = rng.normal();
      d.chain_thetas(i, j) = rng.normal();
    }
    d.logliks[i] = rng.normal(-50, 5);
    d.chain_logliks[i] = rng.normal(-50, 5);
  }
  write_training_csv(d, tmp.path / "t.csv");
  const TrainingDataset back = read_training_csv(tmp.path / "t.csv", 3);
  REQUIRE(back.size() == 20);
  REQUIRE(back.has_chain_aligned);
  REQUIRE(back.proposals == d.proposals);
  REQUIRE(back.logliks == d.logliks);
  REQUIRE(back.chain_thetas == d.chain_thetas);
  REQUIRE(back.chain_logliks == d.chain_logliks);
}

TEST_CASE("config defaults and JSON round trip") {
  SECTION("ricker defaults mirror the reference settings") {
    const auto c = default_ricker_config();
    REQUIRE(c.data_T == 50);
    REQUIRE(c.n_particles == 1000);
    REQUIRE(c.target_rate == 0.40);
    REQUIRE(c.beta_mh == 0.15);
    REQUIRE(c.harvest_iterations - c.harvest_burnin == 2000);
    REQUIRE(c.trim_fraction == 0.10);
    REQUIRE(c.theta_true == std::vector<double>{3.80, 2.30, -1.20});
  }
  SECTION("dwp defaults mirror the reference settings") {
    const auto c = default_dwp_config();
    REQUIRE(c.data_T == 25000);
    REQUIRE(c.n_particles == 250);
    REQUIRE(c.n_replicates == 4);
    REQUIRE(c.target_rate == 0.15);
    REQUIRE(c.harvest_iterations - c.harvest_burnin == 5000);
    REQUIRE(c.prior.components[0].a == -0.7);
  }
  SECTION("round trip and partial override") {
    PipelineConfig c = default_dwp_config();
    c.seed = 99;
    c.n_particles = 123;
    const PipelineConfig back = config_from_json(config_to_json(c));
    REQUIRE(back.model == "dwp-sde");
    REQUIRE(back.seed == 99);
    REQUIRE(back.n_particles == 123);
    REQUIRE(back.prior.components.size() == 7);

    const PipelineConfig partial =
        config_from_json({{"model", "ricker"}, {"n_particles", 10}});
    REQUIRE(partial.n_particles == 10);
    REQUIRE(partial.data_T == 50);  // untouched default
  }
}

TEST_CASE("pipeline end to end at desk scale", "[pipeline]") {
  TempDir tmp("damcmc_pipeline");
  PipelineConfig cfg = tiny_ricker(tmp.path.string());

  SECTION("full pipeline runs and is byte-identical on rerun") {
    cmd_pipeline(cfg, false);
    REQUIRE(fsys::exists(tmp.path / "data.csv"));
    REQUIRE(fsys::exists(tmp.path / "training.csv"));
    REQUIRE(fsys::exists(tmp.path / "model.json"));
    REQUIRE(fsys::exists(tmp.path / "da_chain.csv"));
    REQUIRE(fsys::exists(tmp.path / "ada_chain.csv"));
    const std::string data1 = slurp(tmp.path / "data.csv");
    const std::string da1 = slurp(tmp.path / "da_chain.csv");
    const std::string ada1 = slurp(tmp.path / "ada_chain.csv");

    cmd_pipeline(cfg, true);
    REQUIRE(slurp(tmp.path / "data.csv") == data1);
    REQUIRE(slurp(tmp.path / "da_chain.csv") == da1);
    REQUIRE(slurp(tmp.path / "ada_chain.csv") == ada1);

    SECTION("report percentages match recomputation from the chain CSV") {
      const nlohmann::json rj =
          detail::read_json(tmp.path / "ada_report.json");
      const ChainResult back = read_chain_csv(tmp.path / "ada_chain.csv", 3);
      const RunReport recomputed = compute_report(
          back, "ada", cfg.model, parameter_names(cfg), cfg.burnin);
      REQUIRE(rj.at("acceptance_pct").get<double>() ==
              recomputed.acceptance_pct);
      REQUIRE(rj.at("early_rejection_pct").get<double>() ==
              recomputed.early_rejection_pct);
      REQUIRE(rj.at("mh_branch_pct").get<double>() == recomputed.mh_branch_pct);
      REQUIRE(rj.at("second_stage_pf_calls").get<std::size_t>() ==
              recomputed.second_stage_pf_calls);
      REQUIRE(rj.at("case_counts").get<std::array<std::size_t, 4>>() ==
              recomputed.case_counts);
    }

    SECTION("predict draws from the top half of the chain") {
      cfg.predict_draws = 4;
      cmd_predict(cfg, tmp.path / "da_chain.csv");
      REQUIRE(fsys::exists(tmp.path / "predictive_trajectories.csv"));
      REQUIRE(fsys::exists(tmp.path / "predictive_density.csv"));
      const nlohmann::json s =
          detail::read_json(tmp.path / "predictive_summary.json");
      REQUIRE(s.at("draws").size() == 4);
    }

    SECTION("compare on DA and ADA reports") {
      const nlohmann::json out = cmd_compare(
          {tmp.path / "da_report.json", tmp.path / "ada_report.json"},
          tmp.path / "compare.json");
      REQUIRE(out.at("runs").size() == 2);
      REQUIRE(out.at("baseline").get<std::string>() == "da");
      // identical configs: pf reduction of the baseline against itself is 1
      REQUIRE(out.at("runs")[0].at("pf_reduction_vs_baseline").get<double>() ==
              1.0);
    }
  }

  SECTION("simulate refuses to overwrite without force") {
    cmd_simulate(cfg, false);
    REQUIRE_THROWS_AS(cmd_simulate(cfg, false), std::runtime_error);
    REQUIRE_NOTHROW(cmd_simulate(cfg, true));
  }

  SECTION("T = 0 is an error") {
    cfg.data_T = 0;
    REQUIRE_THROWS_AS(cmd_simulate(cfg, true), std::invalid_argument);
  }

  SECTION("run da without artifacts names the missing prerequisite") {
    cmd_simulate(cfg, true);
    try {
      cmd_run(cfg, "run-da-unknown");
      FAIL("expected an exception");
    } catch (const std::invalid_argument&) {
    }
    try {
      cmd_run(cfg, "da");
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      REQUIRE(std::string(e.what()).find("harvest") != std::string::npos);
    }
  }

  SECTION("compare rejects fewer than two inputs") {
    REQUIRE_THROWS_AS(cmd_compare({tmp.path / "nothing.json"},
                                  tmp.path / "compare.json"),
                      std::invalid_argument);
  }
}

TEST_CASE("compare rejects incompatible configs") {
  TempDir tmp("damcmc_compare_mismatch");
  // two synthetic reports differing in n_particles
  RunReport r;
  r.algorithm = "da";
  r.model = "ricker";
  r.param_names = {"a"};
  nlohmann::json j1 = report_to_json(r);
  j1["config"] = {{"model", "ricker"}, {"data_T", 50}, {"n_particles", 100},
                  {"n_replicates", 1}};
  nlohmann::json j2 = j1;
  j2["algorithm"] = "ada";
  j2["config"]["n_particles"] = 200;
  detail::write_json(j1, tmp.path / "a_report.json");
  detail::write_json(j2, tmp.path / "b_report.json");
  try {
    cmd_compare({tmp.path / "a_report.json", tmp.path / "b_report.json"},
                tmp.path / "compare.json");
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("n_particles") != std::string::npos);
  }
}

TEST_CASE("predict with a single repeated row shares parameters across draws") {
  TempDir tmp("damcmc_predict_stub");
  PipelineConfig cfg = tiny_ricker(tmp.path.string());
  cfg.predict_draws = 6;
  cfg.burnin = 0;
  cmd_simulate(cfg, true);

  // chain stub: one repeated row at the ground truth
  ChainResult stub;
  for (int i = 0; i < 40; ++i) {
    stub.samples.push_back(cfg.theta_true_point());
    stub.logliks.push_back({-100.0, LogLikSource::ParticleFilter, false});
    stub.events.push_back({});
  }
  write_chain_csv(stub, parameter_names(cfg), tmp.path / "stub_chain.csv");
  cmd_predict(cfg, tmp.path / "stub_chain.csv");

  // every draw simulates at theta_true; their values must differ only by seed
  const TimeSeries data = load_data(cfg);
  std::ifstream f(tmp.path / "predictive_trajectories.csv");
  std::string line;
  std::getline(f, line);
  std::vector<double> pooled;
  while (std::getline(f, line)) {
    const auto cells = detail::split_csv_line(line);
    pooled.push_back(std::stod(cells[2]));
  }
  REQUIRE(pooled.size() == 6 * cfg.data_T);

  // predictive mean consistent with the data mean (same ground truth)
  double dm = 0.0;
  for (double v : data.values) dm += v;
  dm /= static_cast<double>(data.size());
  const double pm = sample_mean(pooled);
  const double tol = 3.0 * std::sqrt(sample_variance(pooled) / pooled.size() +
                                     sample_variance(data.values) / data.size());
  REQUIRE(pm == Approx(dm).margin(tol));

  SECTION("empty chain is an error") {
    ChainResult empty;
    write_chain_csv(empty, parameter_names(cfg), tmp.path / "empty_chain.csv");
    REQUIRE_THROWS_AS(cmd_predict(cfg, tmp.path / "empty_chain.csv"),
                      std::runtime_error);
  }
}
