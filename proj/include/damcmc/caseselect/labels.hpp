#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "damcmc/core/rng.hpp"
#include "damcmc/core/types.hpp"
#include "damcmc/surrogate/dataset.hpp"
#include "damcmc/surrogate/gp.hpp"

namespace damcmc {

inline bool is_group13(CaseLabel c) {
  return c == CaseLabel::Case1 || c == CaseLabel::Case3;
}

/// Training rows labeled with the case each proposal belongs to. Feature
/// columns are the proposal coordinates followed by the surrogate
/// log-likelihood ratio (star minus previous); group membership follows the
/// label (1/3 when the surrogate favored the proposal, 2/4 otherwise).
struct LabeledCases {
  Eigen::MatrixXd features;  // n x (d + 1)
  std::vector<CaseLabel> labels;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index theta_dimension() const { return features.cols() - 1; }
};

inline CaseLabel classify_case(bool surrogate_star_higher,
                               bool truth_star_higher) {
  if (surrogate_star_higher)
    return truth_star_higher ? CaseLabel::Case1 : CaseLabel::Case3;
  return truth_star_higher ? CaseLabel::Case4 : CaseLabel::Case2;
}

/// Assigns each harvested proposal to one of the four cases by comparing
/// fresh surrogate draws (for both the proposal and the chain state it
/// competed against) with the stored particle-filter values.
inline LabeledCases label_training_cases(const TrainingDataset& data,
                                         const GpModel& gp, RngStream& rng) {
  data.validate();
  if (!data.has_chain_aligned)
    throw std::invalid_argument(
        "label_training_cases: dataset lacks chain-aligned rows");
  const Eigen::Index n = data.size();
  const Eigen::Index d = data.dimension();
  LabeledCases out;
  out.features.resize(n, d + 1);
  out.labels.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const ParameterPoint star = data.proposals.row(i).transpose();
    const ParameterPoint prev = data.chain_thetas.row(i).transpose();
    const double gp_star = gp.sample_loglik(star, rng).value;
    const double gp_prev = gp.sample_loglik(prev, rng).value;
    const bool sur_higher = gp_star > gp_prev;
    const bool tru_higher = data.logliks[i] > data.chain_logliks[i];
    out.features.row(i).head(d) = data.proposals.row(i);
    out.features(i, d) = gp_star - gp_prev;
    out.labels.push_back(classify_case(sur_higher, tru_higher));
  }
  return out;
}

}  // namespace damcmc
