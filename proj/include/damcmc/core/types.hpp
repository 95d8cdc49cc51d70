#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace damcmc {

/// Sampling coordinates: a vector of log-scale model parameters.
using ParameterPoint = Eigen::VectorXd;

inline bool all_finite(const ParameterPoint& p) {
  return p.allFinite();
}

enum class LogLikSource : std::uint8_t { ParticleFilter, GpDraw, Exact };

/// A log-likelihood value tagged with how it was produced. `collapsed` marks
/// a particle-filter run whose weights all vanished (value is then -inf).
struct LogLikEstimate {
  double value = 0.0;
  LogLikSource source = LogLikSource::Exact;
  bool collapsed = false;
};

enum class CaseLabel : std::uint8_t { Case1 = 1, Case2 = 2, Case3 = 3, Case4 = 4 };

/// Per-iteration event record: which stage was reached, which case was
/// selected, how many expensive likelihood evaluations ran.
struct IterationEvent {
  bool used_mh_branch = false;
  bool stage1_passed = false;
  std::optional<CaseLabel> selected_case;
  int pf_calls = 0;
  bool accepted = false;
  bool early_accepted = false;  // second-stage accept without likelihood call
};

struct ChainResult {
  std::vector<ParameterPoint> samples;
  std::vector<LogLikEstimate> logliks;
  std::vector<IterationEvent> events;
  double wall_seconds = 0.0;

  std::size_t size() const { return samples.size(); }

  /// Chain values of one coordinate as a dense vector.
  Eigen::VectorXd coordinate(int j) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) out[static_cast<Eigen::Index>(i)] = samples[i][j];
    return out;
  }
};

}  // namespace damcmc
