// Command-line pipeline: simulate | harvest | fit | run | compare | predict
// | pipeline. Every command is a pure function of (config, input files,
// seeds); re-running reproduces outputs bit-identically.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "damcmc/pipeline/commands.hpp"
#include "damcmc/pipeline/config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string model = "ricker";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  std::size_t workers = 0;
  bool force = false;
};

damcmc::PipelineConfig resolve_config(const CommonArgs& a) {
  damcmc::PipelineConfig cfg = a.config_path.empty()
                                   ? damcmc::default_config_for(a.model)
                                   : damcmc::load_config(a.config_path);
  if (a.seed_set) cfg.seed = a.seed;
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (a.workers > 0) cfg.workers = a.workers;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON config file (overrides model defaults)");
  cmd->add_option("--model", a.model, "built-in defaults: ricker | dwp-sde")
      ->check(CLI::IsMember({"ricker", "dwp-sde"}));
  cmd->add_option("--seed", a.seed, "master seed")->each([&a](const std::string&) {
    a.seed_set = true;
  });
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--workers", a.workers, "particle-filter replicate workers");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed-acceptance MCMC pipeline with GP surrogate likelihoods"};
  app.require_subcommand(1);

  CommonArgs a_sim, a_harvest, a_fit, a_run, a_predict, a_pipeline;
  std::string run_algorithm;
  std::string predict_chain;
  std::vector<std::string> compare_inputs;
  std::string compare_out = "compare.json";

  auto* sim = app.add_subcommand("simulate", "generate a synthetic data set");
  add_common(sim, a_sim);
  sim->add_flag("--force", a_sim.force, "overwrite existing data files");

  auto* harvest = app.add_subcommand(
      "harvest", "collect training data with a Markov-chain-within-Metropolis pre-run");
  add_common(harvest, a_harvest);

  auto* fit = app.add_subcommand(
      "fit", "fit the GP surrogate and the case-selection model");
  add_common(fit, a_fit);

  auto* run = app.add_subcommand("run", "run a sampler");
  add_common(run, a_run);
  run->add_option("algorithm", run_algorithm, "pmcmc | mcwm | da | ada")
      ->required()
      ->check(CLI::IsMember({"pmcmc", "mcwm", "da", "ada"}));

  auto* compare = app.add_subcommand(
      "compare", "aggregate run reports into speed-up summaries");
  compare->add_option("inputs", compare_inputs,
                      "two or more run report files or run directories")
      ->required();
  compare->add_option("--out", compare_out, "output JSON path");

  auto* predict = app.add_subcommand(
      "predict", "posterior-predictive forward simulations from a chain");
  add_common(predict, a_predict);
  predict->add_option("chain", predict_chain, "chain CSV file")->required();

  auto* pipeline = app.add_subcommand(
      "pipeline", "simulate, harvest, fit, then run da and ada");
  add_common(pipeline, a_pipeline);
  pipeline->add_flag("--force", a_pipeline.force, "overwrite existing outputs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      damcmc::cmd_simulate(resolve_config(a_sim), a_sim.force);
    } else if (harvest->parsed()) {
      damcmc::cmd_harvest(resolve_config(a_harvest));
    } else if (fit->parsed()) {
      damcmc::cmd_fit(resolve_config(a_fit));
    } else if (run->parsed()) {
      damcmc::cmd_run(resolve_config(a_run), run_algorithm);
    } else if (compare->parsed()) {
      std::vector<std::filesystem::path> paths(compare_inputs.begin(),
                                               compare_inputs.end());
      damcmc::cmd_compare(paths, compare_out);
    } else if (predict->parsed()) {
      damcmc::cmd_predict(resolve_config(a_predict), predict_chain);
    } else if (pipeline->parsed()) {
      damcmc::cmd_pipeline(resolve_config(a_pipeline), a_pipeline.force);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
