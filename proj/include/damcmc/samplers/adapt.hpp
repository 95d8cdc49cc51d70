#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "damcmc/core/types.hpp"

namespace damcmc {

/// Adaptive random-walk state: a running covariance estimate of the chain
/// plus a global log-scale steered toward a target acceptance rate with
/// Robbins-Monro steps gamma_r = r^{-0.6}. Freezing makes adapt() a no-op so
/// the tuned kernel can be exported and kept fixed.
class AmState {
 public:
  AmState(int dim, double target_rate, double initial_scale = -1.0)
      : mean_(Eigen::VectorXd::Zero(dim)),
        cov_(Eigen::MatrixXd::Identity(dim, dim)),
        target_(target_rate) {
    if (!(target_rate > 0.0 && target_rate < 1.0))
      throw std::invalid_argument("am: target rate must be in (0,1)");
    const double s0 = initial_scale > 0.0
                          ? initial_scale
                          : 2.38 / std::sqrt(static_cast<double>(dim));
    log_scale_ = std::log(s0);
  }

  void adapt(bool accepted, const ParameterPoint& current_sample) {
    if (frozen_) return;
    ++iter_;
    const double gamma = std::pow(static_cast<double>(iter_), -0.6);
    log_scale_ += gamma * ((accepted ? 1.0 : 0.0) - target_);
    if (iter_ == 1) {
      mean_ = current_sample;
      return;
    }
    const Eigen::VectorXd delta = current_sample - mean_;
    mean_ += gamma * delta;
    cov_ += gamma * (delta * delta.transpose() - cov_);
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  double log_scale() const { return log_scale_; }
  double target_rate() const { return target_; }
  std::size_t iterations() const { return iter_; }
  const Eigen::MatrixXd& raw_covariance() const { return cov_; }

  /// Covariance the proposal kernel should use right now.
  Eigen::MatrixXd proposal_covariance() const {
    const int d = static_cast<int>(cov_.rows());
    Eigen::MatrixXd c = cov_ + 1e-10 * Eigen::MatrixXd::Identity(d, d);
    return std::exp(2.0 * log_scale_) * c;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  double log_scale_ = 0.0;
  double target_ = 0.4;
  std::size_t iter_ = 0;
  bool frozen_ = false;
};

/// Operation-style adapter.
inline void am_adapt(AmState& state, bool accepted,
                     const ParameterPoint& current_sample) {
  state.adapt(accepted, current_sample);
}

}  // namespace damcmc
