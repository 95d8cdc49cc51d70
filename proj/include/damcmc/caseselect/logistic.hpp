#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace damcmc {

/// Binary logistic regression fitted by Newton iterations on the
/// log-likelihood. On complete separation (diverging coefficients) the fit
/// falls back to a small ridge penalty.
struct LogisticModel {
  Eigen::VectorXd coef;  // intercept first
  bool ridge_fallback = false;

  double predict_prob(const Eigen::VectorXd& x) const {
    if (x.size() + 1 != coef.size())
      throw std::invalid_argument("logistic: dimension mismatch");
    double z = coef[0];
    for (Eigen::Index j = 0; j < x.size(); ++j) z += coef[j + 1] * x[j];
    return 1.0 / (1.0 + std::exp(-z));
  }
};

namespace detail {

inline bool newton_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            double ridge, Eigen::VectorXd& beta) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols() + 1;
  Eigen::MatrixXd Z(n, p);
  Z.col(0).setOnes();
  Z.rightCols(X.cols()) = X;

  beta = Eigen::VectorXd::Zero(p);
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd eta = Z * beta;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = 1.0 / (1.0 + std::exp(-eta[i]));
      mu[i] = m;
      w[i] = std::max(m * (1.0 - m), 1e-12);
    }
    Eigen::MatrixXd H = Z.transpose() * w.asDiagonal() * Z;
    H.diagonal().array() += ridge;
    const Eigen::VectorXd grad = Z.transpose() * (y - mu) - ridge * beta;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    if (!step.allFinite()) return false;
    beta += step;
    if (beta.lpNorm<Eigen::Infinity>() > 30.0) return false;  // separation
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) return true;
  }
  return true;
}

}  // namespace detail

/// Fits P(y = 1 | x). y entries must be 0/1 with both classes present.
inline LogisticModel fit_logistic_binary(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y) {
  if (X.rows() != y.size() || X.rows() == 0)
    throw std::invalid_argument("logistic: bad training shape");
  const double mean_y = y.mean();
  if (!(mean_y > 0.0 && mean_y < 1.0))
    throw std::invalid_argument("logistic: both classes must be present");

  LogisticModel model;
  if (detail::newton_logistic(X, y, 0.0, model.coef)) return model;
  if (!detail::newton_logistic(X, y, 1e-4, model.coef))
    throw std::runtime_error("logistic: fit failed even with ridge penalty");
  model.ridge_fallback = true;
  return model;
}

}  // namespace damcmc
