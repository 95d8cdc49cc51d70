#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "damcmc/core/diagnostics.hpp"
#include "damcmc/core/types.hpp"

namespace damcmc {

/// Table-style run diagnostics, computed from the per-iteration event log.
struct RunReport {
  std::string algorithm;
  std::string model;
  std::size_t iterations = 0;
  std::size_t burnin = 0;
  double wall_seconds = 0.0;
  double seconds_per_1000 = 0.0;
  double acceptance_pct = 0.0;
  double min_ess = 0.0;
  double min_ess_per_sec = 0.0;

  // two-stage schemes only
  double mh_branch_pct = 0.0;
  double early_rejection_pct = 0.0;  // share of first-stage entries
  double stage2_entry_pct = 0.0;
  std::size_t pf_calls_total = 0;
  std::size_t second_stage_pf_calls = 0;
  std::size_t stage2_entries = 0;
  std::array<std::size_t, 4> case_counts{};       // of stage-2 entries
  std::array<double, 4> pf_prob_given_case{};     // expensive-call frequency

  // posterior summaries (post-burnin)
  std::vector<std::string> param_names;
  std::vector<double> post_mean, post_q025, post_q975;
};

inline RunReport compute_report(const ChainResult& chain,
                                const std::string& algorithm,
                                const std::string& model,
                                const std::vector<std::string>& param_names,
                                std::size_t burnin) {
  RunReport rep;
  rep.algorithm = algorithm;
  rep.model = model;
  rep.iterations = chain.size();
  rep.burnin = burnin;
  rep.wall_seconds = chain.wall_seconds;
  rep.seconds_per_1000 =
      chain.size() ? chain.wall_seconds / static_cast<double>(chain.size()) * 1000.0 : 0.0;
  rep.param_names = param_names;

  std::size_t accepted = 0, mh_branch = 0, stage1_entries = 0, stage1_passed = 0;
  std::array<std::size_t, 4> case_pf{};
  for (const auto& ev : chain.events) {
    accepted += ev.accepted ? 1 : 0;
    rep.pf_calls_total += static_cast<std::size_t>(ev.pf_calls);
    if (ev.used_mh_branch) {
      ++mh_branch;
      continue;
    }
    ++stage1_entries;
    if (ev.stage1_passed) {
      ++stage1_passed;
      rep.second_stage_pf_calls += static_cast<std::size_t>(ev.pf_calls);
      if (ev.selected_case) {
        const auto k = static_cast<std::size_t>(*ev.selected_case) - 1;
        rep.case_counts[k] += 1;
        if (ev.pf_calls > 0) case_pf[k] += 1;
      }
    }
  }
  rep.stage2_entries = stage1_passed;
  const double n = static_cast<double>(chain.size());
  rep.acceptance_pct = n > 0 ? 100.0 * static_cast<double>(accepted) / n : 0.0;
  rep.mh_branch_pct = n > 0 ? 100.0 * static_cast<double>(mh_branch) / n : 0.0;
  rep.early_rejection_pct =
      stage1_entries > 0
          ? 100.0 * static_cast<double>(stage1_entries - stage1_passed) /
                static_cast<double>(stage1_entries)
          : 0.0;
  rep.stage2_entry_pct =
      stage1_entries > 0
          ? 100.0 * static_cast<double>(stage1_passed) / static_cast<double>(stage1_entries)
          : 0.0;
  for (std::size_t k = 0; k < 4; ++k)
    rep.pf_prob_given_case[k] =
        rep.case_counts[k] > 0
            ? static_cast<double>(case_pf[k]) / static_cast<double>(rep.case_counts[k])
            : 0.0;

  // posterior summaries from the post-burnin slice
  if (chain.size() > burnin + 10) {
    const int d = static_cast<int>(chain.samples.front().size());
    std::vector<Eigen::VectorXd> tail(chain.samples.begin() + static_cast<std::ptrdiff_t>(burnin),
                                      chain.samples.end());
    for (int j = 0; j < d; ++j) {
      std::vector<double> coord(tail.size());
      for (std::size_t i = 0; i < tail.size(); ++i) coord[i] = tail[i][j];
      rep.post_mean.push_back(sample_mean(coord));
      rep.post_q025.push_back(sample_quantile(coord, 0.025));
      rep.post_q975.push_back(sample_quantile(coord, 0.975));
    }
    rep.min_ess = min_ess(tail);
    rep.min_ess_per_sec =
        chain.wall_seconds > 0 ? rep.min_ess / chain.wall_seconds : 0.0;
  }
  return rep;
}

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["algorithm"] = r.algorithm;
  j["model"] = r.model;
  j["iterations"] = r.iterations;
  j["burnin"] = r.burnin;
  j["wall_seconds"] = r.wall_seconds;
  j["seconds_per_1000_iterations"] = r.seconds_per_1000;
  j["acceptance_pct"] = r.acceptance_pct;
  j["min_ess"] = r.min_ess;
  j["min_ess_per_sec"] = r.min_ess_per_sec;
  j["mh_branch_pct"] = r.mh_branch_pct;
  j["early_rejection_pct"] = r.early_rejection_pct;
  j["stage2_entry_pct"] = r.stage2_entry_pct;
  j["pf_calls_total"] = r.pf_calls_total;
  j["second_stage_pf_calls"] = r.second_stage_pf_calls;
  j["stage2_entries"] = r.stage2_entries;
  j["case_counts"] = r.case_counts;
  j["pf_prob_given_case"] = r.pf_prob_given_case;
  j["param_names"] = r.param_names;
  j["posterior_mean"] = r.post_mean;
  j["posterior_q025"] = r.post_q025;
  j["posterior_q975"] = r.post_q975;
  return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.algorithm = j.at("algorithm").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.iterations = j.at("iterations").get<std::size_t>();
  r.burnin = j.at("burnin").get<std::size_t>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.seconds_per_1000 = j.at("seconds_per_1000_iterations").get<double>();
  r.acceptance_pct = j.at("acceptance_pct").get<double>();
  r.min_ess = j.at("min_ess").get<double>();
  r.min_ess_per_sec = j.at("min_ess_per_sec").get<double>();
  r.mh_branch_pct = j.at("mh_branch_pct").get<double>();
  r.early_rejection_pct = j.at("early_rejection_pct").get<double>();
  r.stage2_entry_pct = j.at("stage2_entry_pct").get<double>();
  r.pf_calls_total = j.at("pf_calls_total").get<std::size_t>();
  r.second_stage_pf_calls = j.at("second_stage_pf_calls").get<std::size_t>();
  r.stage2_entries = j.at("stage2_entries").get<std::size_t>();
  r.case_counts = j.at("case_counts").get<std::array<std::size_t, 4>>();
  r.pf_prob_given_case = j.at("pf_prob_given_case").get<std::array<double, 4>>();
  r.param_names = j.at("param_names").get<std::vector<std::string>>();
  r.post_mean = j.at("posterior_mean").get<std::vector<double>>();
  r.post_q025 = j.at("posterior_q025").get<std::vector<double>>();
  r.post_q975 = j.at("posterior_q975").get<std::vector<double>>();
  return r;
}

}  // namespace damcmc
