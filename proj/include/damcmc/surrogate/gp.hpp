#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "damcmc/core/rng.hpp"
#include "damcmc/core/types.hpp"
#include "damcmc/detail/nelder_mead.hpp"
#include "damcmc/surrogate/dataset.hpp"
#include "damcmc/surrogate/features.hpp"

namespace damcmc {

/// eta = [phi, beta]: kernel parameters plus mean-function coefficients.
/// The kernel is an anisotropic squared-exponential on the raw parameter
/// coordinates plus a nugget; the mean function is the quadratic-with-
/// interactions polynomial from build_features.
struct GpHyperparams {
  Eigen::VectorXd beta;
  double signal_variance = 1.0;
  Eigen::VectorXd length_scales;
  double nugget_variance = 1e-2;

  void validate() const {
    if (!(signal_variance > 0.0) || !(nugget_variance > 0.0))
      throw std::invalid_argument("gp: variances must be > 0");
    if ((length_scales.array() <= 0.0).any())
      throw std::invalid_argument("gp: length scales must be > 0");
  }
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;  // response variance, includes the nugget
};

struct GpFitOptions {
  int restarts = 8;
  int max_evals_per_restart = 220;
  std::uint64_t seed = 20240915;
  // cap on rows used for the hyperparameter search; the final model still
  // conditions on every row (each marginal evaluation is O(n^3))
  Eigen::Index max_search_rows = 600;
};

namespace detail {

inline Eigen::MatrixXd se_kernel_matrix(const Eigen::MatrixXd& X,
                                        double signal_variance,
                                        const Eigen::VectorXd& length_scales) {
  const Eigen::Index n = X.rows();
  // scale columns once, then use squared Euclidean distances
  Eigen::MatrixXd S = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) S.col(j) /= length_scales[j];
  Eigen::VectorXd sq = S.rowwise().squaredNorm();
  Eigen::MatrixXd K = -2.0 * (S * S.transpose());
  K.colwise() += sq;
  K.rowwise() += sq.transpose();
  K = (-0.5 * K.cwiseMax(0.0).array()).exp().matrix() * signal_variance;
  return K;
}

inline Eigen::VectorXd se_kernel_vector(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& query,
                                        double signal_variance,
                                        const Eigen::VectorXd& length_scales) {
  Eigen::VectorXd k(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double z = (X(i, j) - query[j]) / length_scales[j];
      acc += z * z;
    }
    k[i] = signal_variance * std::exp(-0.5 * acc);
  }
  return k;
}

/// Cholesky with an escalating relative jitter ladder; throws when even the
/// largest jitter cannot make the matrix positive definite.
inline Eigen::LLT<Eigen::MatrixXd> chol_with_jitter(Eigen::MatrixXd C) {
  const double scale = C.diagonal().mean();
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() == Eigen::Success) return llt;
  for (double jitter = 1e-10; jitter <= 1e-4 + 1e-18; jitter *= 10.0) {
    Eigen::MatrixXd Cj = C;
    Cj.diagonal().array() += jitter * scale;
    llt.compute(Cj);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw std::runtime_error("gp: kernel matrix not positive definite after jitter escalation");
}

struct MarginalFit {
  double log_marginal = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd beta;
};

/// Profiled log marginal likelihood: beta is solved by generalized least
/// squares at each kernel-parameter setting.
inline MarginalFit profile_log_marginal(const Eigen::MatrixXd& X,
                                        const Eigen::MatrixXd& F,
                                        const Eigen::VectorXd& y,
                                        double signal_variance,
                                        const Eigen::VectorXd& length_scales,
                                        double nugget_variance) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd C = se_kernel_matrix(X, signal_variance, length_scales);
  C.diagonal().array() += nugget_variance;

  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) return {};

  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd Fw = L.triangularView<Eigen::Lower>().solve(F);
  const Eigen::VectorXd yw = L.triangularView<Eigen::Lower>().solve(y);

  Eigen::MatrixXd G = Fw.transpose() * Fw;
  G.diagonal().array() += 1e-10 * (G.diagonal().mean() + 1.0);
  const Eigen::VectorXd beta = G.ldlt().solve(Fw.transpose() * yw);

  const Eigen::VectorXd resid = yw - Fw * beta;
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(L(i, i));
  const double lm = -0.5 * resid.squaredNorm() - log_det -
                    0.5 * static_cast<double>(n) * std::log(2.0 * 3.141592653589793);
  if (!std::isfinite(lm)) return {};
  return {lm, beta};
}

}  // namespace detail

/// A fitted Gaussian-process surrogate of the log-likelihood surface, with
/// cached factorizations for O(n) prediction per query. Immutable after fit;
/// safe to share across threads for prediction.
class GpModel {
 public:
  GpModel() = default;

  GpModel(GpHyperparams hyper, Eigen::MatrixXd X, Eigen::VectorXd y)
      : hyper_(std::move(hyper)), X_(std::move(X)), y_(std::move(y)) {
    hyper_.validate();
    if (X_.rows() != y_.size())
      throw std::invalid_argument("gp: inputs/targets mismatch");
    rebuild_cache();
  }

  const GpHyperparams& hyperparams() const { return hyper_; }
  const Eigen::MatrixXd& inputs() const { return X_; }
  const Eigen::VectorXd& targets() const { return y_; }
  double log_marginal() const { return log_marginal_; }
  Eigen::Index size() const { return X_.rows(); }

  /// Closed-form Gaussian predictive for the (noisy) log-likelihood value at
  /// theta. Variance is clipped at zero from below.
  GpPrediction predict(const ParameterPoint& theta) const {
    const Eigen::VectorXd k = detail::se_kernel_vector(
        X_, theta, hyper_.signal_variance, hyper_.length_scales);
    const Eigen::VectorXd f = build_features(theta);
    const double mean = f.dot(hyper_.beta) + k.dot(alpha_);
    const Eigen::VectorXd v = chol_.matrixL().solve(k);
    double var = hyper_.signal_variance + hyper_.nugget_variance - v.squaredNorm();
    return {mean, std::max(var, 0.0)};
  }

  /// One stochastic draw from the predictive at theta, tagged GpDraw.
  LogLikEstimate sample_loglik(const ParameterPoint& theta, RngStream& rng) const {
    const GpPrediction p = predict(theta);
    return {p.mean + std::sqrt(p.variance) * rng.normal(), LogLikSource::GpDraw,
            false};
  }

  /// Maximum-marginal-likelihood fit with multi-start Nelder-Mead over the
  /// log kernel parameters; mean coefficients are profiled out by GLS. When
  /// the data set exceeds max_search_rows, the search runs on a strided
  /// subset and the returned model conditions on the full set.
  static GpModel fit(const TrainingDataset& data, const GpFitOptions& opts = {}) {
    data.validate();
    if (opts.max_search_rows > 0 && data.size() > opts.max_search_rows) {
      const Eigen::Index stride =
          (data.size() + opts.max_search_rows - 1) / opts.max_search_rows;
      TrainingDataset sub;
      const Eigen::Index m = (data.size() + stride - 1) / stride;
      sub.proposals.resize(m, data.dimension());
      sub.logliks.resize(m);
      for (Eigen::Index i = 0, w = 0; i < data.size(); i += stride, ++w) {
        sub.proposals.row(w) = data.proposals.row(i);
        sub.logliks[w] = data.logliks[i];
      }
      GpFitOptions sub_opts = opts;
      sub_opts.max_search_rows = 0;
      const GpModel searched = fit(sub, sub_opts);
      return with_hyperparams(data, searched.hyperparams().signal_variance,
                              searched.hyperparams().length_scales,
                              searched.hyperparams().nugget_variance);
    }
    const Eigen::MatrixXd& X = data.proposals;
    const Eigen::VectorXd& y = data.logliks;
    const Eigen::Index n = X.rows();
    const int d = static_cast<int>(X.cols());
    const Eigen::MatrixXd F = build_feature_matrix(X);
    if (n <= F.cols())
      throw std::invalid_argument("gp: need more rows than feature dimension");

    // residual scale after an ordinary least-squares mean fit
    const Eigen::VectorXd beta_ols = F.colPivHouseholderQr().solve(y);
    const double res_var = std::max((y - F * beta_ols).squaredNorm() /
                                        static_cast<double>(n),
                                    1e-12);
    Eigen::VectorXd col_sd(d);
    for (int j = 0; j < d; ++j) {
      const double m = X.col(j).mean();
      col_sd[j] = std::max(
          std::sqrt((X.col(j).array() - m).square().mean()), 1e-8);
    }

    // objective over eta = [log s2, log l_1..d, log nugget]
    auto objective = [&](const Eigen::VectorXd& eta) {
      for (Eigen::Index i = 0; i < eta.size(); ++i)
        if (!(eta[i] > -30.0 && eta[i] < 30.0))
          return std::numeric_limits<double>::infinity();
      const double s2 = std::exp(eta[0]);
      Eigen::VectorXd ls(d);
      for (int j = 0; j < d; ++j) ls[j] = std::exp(eta[1 + j]);
      const double nug = std::exp(eta[1 + d]);
      const auto fitv = detail::profile_log_marginal(X, F, y, s2, ls, nug);
      return -fitv.log_marginal;
    };

    // deterministic starts spanning signal/nugget splits and length scales,
    // plus random restarts
    std::vector<Eigen::VectorXd> starts;
    auto make_start = [&](double s2_frac, double ls_mult, double nug_frac) {
      Eigen::VectorXd eta(d + 2);
      eta[0] = std::log(std::max(s2_frac * res_var, 1e-12));
      for (int j = 0; j < d; ++j) eta[1 + j] = std::log(col_sd[j] * ls_mult);
      eta[1 + d] = std::log(std::max(nug_frac * res_var, 1e-12));
      return eta;
    };
    starts.push_back(make_start(0.9, 1.0, 0.1));
    starts.push_back(make_start(0.5, 2.0, 0.5));
    starts.push_back(make_start(0.1, 0.5, 0.9));
    starts.push_back(make_start(0.9, 4.0, 0.1));
    RngStream rng(opts.seed, 777);
    while (static_cast<int>(starts.size()) < opts.restarts) {
      Eigen::VectorXd eta = make_start(0.5, 1.0, 0.5);
      for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] += rng.normal(0.0, 1.2);
      starts.push_back(eta);
    }

    Eigen::VectorXd best_eta;
    double best_val = std::numeric_limits<double>::infinity();
    for (const auto& s0 : starts) {
      const auto r = detail::nelder_mead(objective, s0, 0.7,
                                         opts.max_evals_per_restart, 1e-9);
      if (r.value < best_val) {
        best_val = r.value;
        best_eta = r.x;
      }
    }
    if (!std::isfinite(best_val))
      throw std::runtime_error("gp: hyperparameter search failed");

    GpHyperparams hyper;
    hyper.signal_variance = std::exp(best_eta[0]);
    hyper.length_scales.resize(d);
    for (int j = 0; j < d; ++j) hyper.length_scales[j] = std::exp(best_eta[1 + j]);
    hyper.nugget_variance = std::exp(best_eta[1 + d]);
    const auto final_fit = detail::profile_log_marginal(
        X, F, y, hyper.signal_variance, hyper.length_scales,
        hyper.nugget_variance);
    hyper.beta = final_fit.beta;
    return GpModel(std::move(hyper), X, y);
  }

  /// Conditions on `data` at fixed kernel parameters; the mean coefficients
  /// are re-estimated by GLS. Lets a hyperparameter search run on a subset
  /// while the final model uses every row.
  static GpModel with_hyperparams(const TrainingDataset& data,
                                  double signal_variance,
                                  const Eigen::VectorXd& length_scales,
                                  double nugget_variance) {
    data.validate();
    const Eigen::MatrixXd F = build_feature_matrix(data.proposals);
    const auto fitv = detail::profile_log_marginal(
        data.proposals, F, data.logliks, signal_variance, length_scales,
        nugget_variance);
    if (!std::isfinite(fitv.log_marginal))
      throw std::runtime_error("gp: conditioning failed at given hyperparameters");
    GpHyperparams hyper;
    hyper.signal_variance = signal_variance;
    hyper.length_scales = length_scales;
    hyper.nugget_variance = nugget_variance;
    hyper.beta = fitv.beta;
    return GpModel(std::move(hyper), data.proposals, data.logliks);
  }

  /// Log marginal likelihood of the stored targets at arbitrary kernel
  /// parameters (beta profiled out); used by fit diagnostics and tests.
  static double log_marginal_at(const TrainingDataset& data,
                                double signal_variance,
                                const Eigen::VectorXd& length_scales,
                                double nugget_variance) {
    const Eigen::MatrixXd F = build_feature_matrix(data.proposals);
    return detail::profile_log_marginal(data.proposals, F, data.logliks,
                                        signal_variance, length_scales,
                                        nugget_variance)
        .log_marginal;
  }

 private:
  void rebuild_cache() {
    Eigen::MatrixXd C = detail::se_kernel_matrix(X_, hyper_.signal_variance,
                                                 hyper_.length_scales);
    C.diagonal().array() += hyper_.nugget_variance;
    chol_ = detail::chol_with_jitter(std::move(C));
    const Eigen::MatrixXd F = build_feature_matrix(X_);
    const Eigen::VectorXd resid = y_ - F * hyper_.beta;
    alpha_ = chol_.solve(resid);
    double log_det = 0.0;
    const Eigen::MatrixXd L = chol_.matrixL();
    for (Eigen::Index i = 0; i < L.rows(); ++i) log_det += std::log(L(i, i));
    const Eigen::VectorXd w = L.triangularView<Eigen::Lower>().solve(resid);
    log_marginal_ = -0.5 * w.squaredNorm() - log_det -
                    0.5 * static_cast<double>(X_.rows()) *
                        std::log(2.0 * 3.141592653589793);
  }

  GpHyperparams hyper_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double log_marginal_ = 0.0;
};

/// Surrogate-draw adapter around a GpModel with a two-slot memo for the
/// predictive moments. The chain state recurs across iterations, so its
/// O(n^2) solve is reused; draws stay independent. Single-chain use only.
class GpSurrogate {
 public:
  explicit GpSurrogate(const GpModel& gp) : gp_(&gp) {}

  LogLikEstimate operator()(const ParameterPoint& theta, RngStream& rng) const {
    const GpPrediction p = predict_memo(theta);
    return {p.mean + std::sqrt(p.variance) * rng.normal(),
            LogLikSource::GpDraw, false};
  }

 private:
  GpPrediction predict_memo(const ParameterPoint& theta) const {
    for (const auto& e : memo_)
      if (e.valid && e.theta.size() == theta.size() && e.theta == theta)
        return e.pred;
    const GpPrediction p = gp_->predict(theta);
    memo_[static_cast<std::size_t>(next_)] = {theta, p, true};
    next_ ^= 1;
    return p;
  }

  struct Entry {
    ParameterPoint theta;
    GpPrediction pred;
    bool valid = false;
  };
  const GpModel* gp_;
  mutable std::array<Entry, 2> memo_{};
  mutable int next_ = 0;
};

/// Convenience free functions mirroring the operation names used elsewhere.
inline GpModel fit_gp(const TrainingDataset& data, const GpFitOptions& opts = {}) {
  return GpModel::fit(data, opts);
}

inline GpPrediction gp_predict(const GpModel& m, const ParameterPoint& theta) {
  return m.predict(theta);
}

inline LogLikEstimate gp_sample_loglik(const GpModel& m,
                                       const ParameterPoint& theta,
                                       RngStream& rng) {
  return m.sample_loglik(theta, rng);
}

}  // namespace damcmc
