#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "damcmc/core/types.hpp"

namespace damcmc {

inline int feature_dimension(int d) { return 1 + 2 * d + d * (d - 1) / 2; }

/// Quadratic-with-interactions covariates of a parameter point:
/// [1, theta_1..theta_d, theta_1^2..theta_d^2, theta_i theta_j (i<j)].
inline Eigen::VectorXd build_features(const ParameterPoint& theta) {
  const int d = static_cast<int>(theta.size());
  if (d < 1) throw std::invalid_argument("build_features: empty point");
  Eigen::VectorXd f(feature_dimension(d));
  int k = 0;
  f[k++] = 1.0;
  for (int i = 0; i < d; ++i) f[k++] = theta[i];
  for (int i = 0; i < d; ++i) f[k++] = theta[i] * theta[i];
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) f[k++] = theta[i] * theta[j];
  return f;
}

/// Row-wise features of an n x d input matrix.
inline Eigen::MatrixXd build_feature_matrix(const Eigen::MatrixXd& X) {
  const int d = static_cast<int>(X.cols());
  Eigen::MatrixXd F(X.rows(), feature_dimension(d));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    F.row(i) = build_features(X.row(i).transpose()).transpose();
  return F;
}

}  // namespace damcmc
