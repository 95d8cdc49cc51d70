#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "damcmc/core/types.hpp"
#include "damcmc/models/prior.hpp"

namespace damcmc {

/// One structured configuration per experiment. Defaults mirror the two
/// bundled case studies; a JSON config file overrides field by field.
struct PipelineConfig {
  std::string model = "ricker";  // ricker | dwp-sde
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::size_t workers = 1;

  // data generation
  std::size_t data_T = 50;
  std::vector<double> theta_true;
  double x0 = 7.0;
  double dT = 1.0;
  std::size_t sim_substeps = 10;
  double dwp_A = -0.0025;
  double dwp_g = 0.0;

  // prior and chain start
  PriorSpec prior;
  std::vector<double> theta0;

  // sampler settings
  std::size_t iterations = 50000;
  std::size_t burnin = 2000;
  std::size_t harvest_iterations = 4000;
  std::size_t harvest_burnin = 2000;
  std::size_t n_particles = 1000;
  std::size_t n_replicates = 1;
  std::size_t euler_substeps = 10;
  double target_rate = 0.40;
  double beta_mh = 0.15;
  double wide_scale = 1.25;
  bool refresh_second_stage = true;
  double trim_fraction = 0.10;
  std::string selector = "tree";  // tree | coin | logistic
  std::string resampling = "systematic";
  double gp_rmse_warn = 10.0;
  std::size_t predict_draws = 10;

  int dimension() const { return static_cast<int>(theta_true.size()); }

  ParameterPoint theta_true_point() const {
    return Eigen::Map<const Eigen::VectorXd>(theta_true.data(),
                                             static_cast<Eigen::Index>(theta_true.size()));
  }
  ParameterPoint theta0_point() const {
    return Eigen::Map<const Eigen::VectorXd>(theta0.data(),
                                             static_cast<Eigen::Index>(theta0.size()));
  }

  void validate() const {
    if (model != "ricker" && model != "dwp-sde")
      throw std::invalid_argument("config: unknown model '" + model + "'");
    if (theta_true.empty() || theta0.size() != theta_true.size())
      throw std::invalid_argument("config: theta_true/theta0 dimension mismatch");
    if (!(trim_fraction >= 0.0 && trim_fraction < 1.0))
      throw std::invalid_argument("config: trim_fraction must be in [0,1)");
    if (selector != "tree" && selector != "coin" && selector != "logistic")
      throw std::invalid_argument("config: unknown selector '" + selector + "'");
    prior.validate();
  }
};

/// Paper-style Ricker configuration.
inline PipelineConfig default_ricker_config() {
  PipelineConfig c;
  c.model = "ricker";
  c.data_T = 50;
  c.theta_true = {3.80, 2.30, -1.20};
  c.x0 = 7.0;
  c.prior.components = {PriorComponent::uniform(0.0, 10.0),
                        PriorComponent::uniform(0.0, 4.0),
                        PriorComponent::uniform(-10.0, 1.0)};
  c.theta0 = {1.10, 1.10, 2.30};
  c.iterations = 50000;
  c.burnin = 2000;
  c.harvest_iterations = 4000;
  c.harvest_burnin = 2000;
  c.n_particles = 1000;
  c.n_replicates = 1;
  c.target_rate = 0.40;
  c.beta_mh = 0.15;
  return c;
}

/// Paper-style double-well configuration (synthetic data stands in for the
/// original recordings, which are not distributed).
inline PipelineConfig default_dwp_config() {
  PipelineConfig c;
  c.model = "dwp-sde";
  c.data_T = 25000;
  c.theta_true = {0.73, 0.53, 3.10, 3.32, 0.45, -0.07, 0.68};
  c.x0 = std::exp(3.10);
  c.dwp_A = -0.0025;
  c.dwp_g = 0.0;
  c.prior.components = {
      PriorComponent::gauss(-0.7, 0.8),  PriorComponent::gauss(-0.7, 0.8),
      PriorComponent::gauss(3.34, 0.173), PriorComponent::gauss(2.3, 0.4),
      PriorComponent::gauss(0.0, 0.5),   PriorComponent::gauss(0.0, 0.5),
      PriorComponent::gauss(0.69, 0.5)};
  c.theta0 = {std::log(0.5), std::log(2.0), std::log(20.0), std::log(15.0),
              std::log(1.5), std::log(1.5), std::log(2.5)};
  c.iterations = 10000;
  c.burnin = 1000;
  c.harvest_iterations = 15000;
  c.harvest_burnin = 10000;
  c.n_particles = 250;
  c.n_replicates = 4;
  c.euler_substeps = 10;
  c.target_rate = 0.15;
  c.beta_mh = 0.15;
  c.workers = 4;
  return c;
}

inline PipelineConfig default_config_for(const std::string& model) {
  if (model == "ricker") return default_ricker_config();
  if (model == "dwp-sde") return default_dwp_config();
  throw std::invalid_argument("config: unknown model '" + model + "'");
}

namespace detail {

inline nlohmann::json prior_to_json(const PriorSpec& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : p.components) {
    arr.push_back({{"kind", c.kind == PriorComponent::Kind::Uniform ? "uniform" : "normal"},
                   {"a", c.a},
                   {"b", c.b}});
  }
  return {{"flat", p.improper_flat}, {"components", std::move(arr)}};
}

inline PriorSpec prior_from_json(const nlohmann::json& j) {
  PriorSpec p;
  p.improper_flat = j.value("flat", false);
  for (const auto& cj : j.at("components")) {
    const std::string kind = cj.at("kind").get<std::string>();
    if (kind == "uniform")
      p.components.push_back(
          PriorComponent::uniform(cj.at("a").get<double>(), cj.at("b").get<double>()));
    else if (kind == "normal")
      p.components.push_back(
          PriorComponent::gauss(cj.at("a").get<double>(), cj.at("b").get<double>()));
    else
      throw std::runtime_error("config: unknown prior kind '" + kind + "'");
  }
  return p;
}

}  // namespace detail

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  return {{"model", c.model},
          {"seed", c.seed},
          {"out_dir", c.out_dir},
          {"workers", c.workers},
          {"data_T", c.data_T},
          {"theta_true", c.theta_true},
          {"x0", c.x0},
          {"dT", c.dT},
          {"sim_substeps", c.sim_substeps},
          {"dwp_A", c.dwp_A},
          {"dwp_g", c.dwp_g},
          {"prior", detail::prior_to_json(c.prior)},
          {"theta0", c.theta0},
          {"iterations", c.iterations},
          {"burnin", c.burnin},
          {"harvest_iterations", c.harvest_iterations},
          {"harvest_burnin", c.harvest_burnin},
          {"n_particles", c.n_particles},
          {"n_replicates", c.n_replicates},
          {"euler_substeps", c.euler_substeps},
          {"target_rate", c.target_rate},
          {"beta_mh", c.beta_mh},
          {"wide_scale", c.wide_scale},
          {"refresh_second_stage", c.refresh_second_stage},
          {"trim_fraction", c.trim_fraction},
          {"selector", c.selector},
          {"resampling", c.resampling},
          {"gp_rmse_warn", c.gp_rmse_warn},
          {"predict_draws", c.predict_draws}};
}

/// Applies a (possibly partial) JSON object on top of a base configuration.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig base =
      j.contains("model") ? default_config_for(j.at("model").get<std::string>())
                          : default_ricker_config();
  PipelineConfig c = base;
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.workers = j.value("workers", c.workers);
  c.data_T = j.value("data_T", c.data_T);
  if (j.contains("theta_true")) c.theta_true = j.at("theta_true").get<std::vector<double>>();
  c.x0 = j.value("x0", c.x0);
  c.dT = j.value("dT", c.dT);
  c.sim_substeps = j.value("sim_substeps", c.sim_substeps);
  c.dwp_A = j.value("dwp_A", c.dwp_A);
  c.dwp_g = j.value("dwp_g", c.dwp_g);
  if (j.contains("prior")) c.prior = detail::prior_from_json(j.at("prior"));
  if (j.contains("theta0")) c.theta0 = j.at("theta0").get<std::vector<double>>();
  c.iterations = j.value("iterations", c.iterations);
  c.burnin = j.value("burnin", c.burnin);
  c.harvest_iterations = j.value("harvest_iterations", c.harvest_iterations);
  c.harvest_burnin = j.value("harvest_burnin", c.harvest_burnin);
  c.n_particles = j.value("n_particles", c.n_particles);
  c.n_replicates = j.value("n_replicates", c.n_replicates);
  c.euler_substeps = j.value("euler_substeps", c.euler_substeps);
  c.target_rate = j.value("target_rate", c.target_rate);
  c.beta_mh = j.value("beta_mh", c.beta_mh);
  c.wide_scale = j.value("wide_scale", c.wide_scale);
  c.refresh_second_stage = j.value("refresh_second_stage", c.refresh_second_stage);
  c.trim_fraction = j.value("trim_fraction", c.trim_fraction);
  c.selector = j.value("selector", c.selector);
  c.resampling = j.value("resampling", c.resampling);
  c.gp_rmse_warn = j.value("gp_rmse_warn", c.gp_rmse_warn);
  c.predict_draws = j.value("predict_draws", c.predict_draws);
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path.string());
  nlohmann::json j;
  f >> j;
  return config_from_json(j);
}

inline std::vector<std::string> parameter_names(const PipelineConfig& c) {
  if (c.model == "ricker") return {"log_r", "log_phi", "log_sigma"};
  if (c.model == "dwp-sde")
    return {"log_kappa", "log_gamma", "log_c", "log_d",
            "log_p1",    "log_p2",    "log_sigma"};
  std::vector<std::string> names;
  for (int j = 0; j < c.dimension(); ++j) names.push_back("theta_" + std::to_string(j));
  return names;
}

}  // namespace damcmc
