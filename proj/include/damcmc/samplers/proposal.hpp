#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <stdexcept>

#include "damcmc/core/rng.hpp"
#include "damcmc/core/types.hpp"

namespace damcmc {

/// Gaussian random-walk kernel with covariance scale^2 * Sigma. Symmetric,
/// so the forward/backward density ratio is identically zero in log domain.
class GaussianProposal {
 public:
  GaussianProposal() = default;

  GaussianProposal(const Eigen::MatrixXd& covariance, double scale = 1.0)
      : covariance_(covariance), scale_(scale) {
    if (covariance.rows() != covariance.cols())
      throw std::invalid_argument("proposal: covariance must be square");
    if (!(scale > 0.0)) throw std::invalid_argument("proposal: scale must be > 0");
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("proposal: covariance not positive definite");
    chol_lower_ = llt.matrixL();
  }

  int dimension() const { return static_cast<int>(covariance_.rows()); }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  double scale() const { return scale_; }

  ParameterPoint sample(const ParameterPoint& center, RngStream& rng) const {
    Eigen::VectorXd z(dimension());
    for (int j = 0; j < dimension(); ++j) z[j] = rng.normal();
    return center + scale_ * (chol_lower_ * z);
  }

  /// log g(a|b) - log g(b|a); zero by symmetry.
  double log_ratio(const ParameterPoint&, const ParameterPoint&) const {
    return 0.0;
  }

 private:
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd chol_lower_;
  double scale_ = 1.0;
};

}  // namespace damcmc
