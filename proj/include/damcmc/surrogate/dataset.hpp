#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace damcmc {

/// Harvested log-likelihood evaluations. `proposals`/`logliks` hold one row
/// per proposed point; the chain-aligned block holds, row-matched, the chain
/// state each proposal competed against and its freshly estimated
/// log-likelihood.
struct TrainingDataset {
  Eigen::MatrixXd proposals;      // n x d
  Eigen::VectorXd logliks;        // n
  Eigen::MatrixXd chain_thetas;   // n x d (optional block)
  Eigen::VectorXd chain_logliks;  // n
  bool has_chain_aligned = false;

  Eigen::Index size() const { return proposals.rows(); }
  Eigen::Index dimension() const { return proposals.cols(); }

  void validate() const {
    if (proposals.rows() != logliks.size())
      throw std::invalid_argument("training data: row count mismatch");
    if (has_chain_aligned &&
        (chain_thetas.rows() != proposals.rows() ||
         chain_logliks.size() != logliks.size()))
      throw std::invalid_argument("training data: chain alignment mismatch");
    if (proposals.hasNaN() || logliks.hasNaN())
      throw std::invalid_argument("training data: NaN entries");
  }
};

/// Drops the floor(fraction * n) rows with the lowest log-likelihood values,
/// preserving the order of the survivors. Chain-aligned rows follow their
/// proposal row.
inline TrainingDataset trim_training_data(const TrainingDataset& data,
                                          double fraction) {
  data.validate();
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw std::invalid_argument("trim_training_data: fraction must be in [0,1)");
  const Eigen::Index n = data.size();
  const Eigen::Index k =
      static_cast<Eigen::Index>(fraction * static_cast<double>(n));
  if (k == 0) return data;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return data.logliks[a] < data.logliks[b];
  });
  std::vector<bool> drop(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < k; ++i)
    drop[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  TrainingDataset out;
  out.has_chain_aligned = data.has_chain_aligned;
  out.proposals.resize(n - k, data.dimension());
  out.logliks.resize(n - k);
  if (data.has_chain_aligned) {
    out.chain_thetas.resize(n - k, data.dimension());
    out.chain_logliks.resize(n - k);
  }
  Eigen::Index w = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (drop[static_cast<std::size_t>(i)]) continue;
    out.proposals.row(w) = data.proposals.row(i);
    out.logliks[w] = data.logliks[i];
    if (data.has_chain_aligned) {
      out.chain_thetas.row(w) = data.chain_thetas.row(i);
      out.chain_logliks[w] = data.chain_logliks[i];
    }
    ++w;
  }
  return out;
}

/// Removes rows whose log-likelihood is not finite (collapsed filter runs);
/// such rows would poison a GP fit.
inline TrainingDataset drop_nonfinite_rows(const TrainingDataset& data) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    if (std::isfinite(data.logliks[i]) &&
        (!data.has_chain_aligned || std::isfinite(data.chain_logliks[i])))
      keep.push_back(i);
  if (keep.size() == static_cast<std::size_t>(data.size())) return data;
  TrainingDataset out;
  out.has_chain_aligned = data.has_chain_aligned;
  const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
  out.proposals.resize(m, data.dimension());
  out.logliks.resize(m);
  if (data.has_chain_aligned) {
    out.chain_thetas.resize(m, data.dimension());
    out.chain_logliks.resize(m);
  }
  for (Eigen::Index w = 0; w < m; ++w) {
    const Eigen::Index i = keep[static_cast<std::size_t>(w)];
    out.proposals.row(w) = data.proposals.row(i);
    out.logliks[w] = data.logliks[i];
    if (data.has_chain_aligned) {
      out.chain_thetas.row(w) = data.chain_thetas.row(i);
      out.chain_logliks[w] = data.chain_logliks[i];
    }
  }
  return out;
}

}  // namespace damcmc
