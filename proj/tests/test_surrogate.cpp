#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "damcmc/core/diagnostics.hpp"
#include "damcmc/io/container.hpp"
#include "damcmc/surrogate/features.hpp"
#include "damcmc/surrogate/gp.hpp"

using namespace damcmc;

namespace {

TrainingDataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  TrainingDataset d;
  d.proposals = X;
  d.logliks = y;
  return d;
}

Eigen::MatrixXd random_inputs(int n, int d, RngStream& rng, double spread = 2.0) {
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = rng.normal(0.0, spread);
  return X;
}

/// Dense re-solve oracle: direct kernel assembly and full-matrix solve,
/// sharing no code with GpModel's cached path.
struct DenseOracle {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  GpHyperparams h;

  double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      const double z = (a[j] - b[j]) / h.length_scales[j];
      acc += z * z;
    }
    return h.signal_variance * std::exp(-0.5 * acc);
  }

  GpPrediction predict(const ParameterPoint& q) const {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd C(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        C(i, j) = kernel(X.row(i).transpose(), X.row(j).transpose());
    C.diagonal().array() += h.nugget_variance;
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i)
      k[i] = kernel(X.row(i).transpose(), q);
    const Eigen::MatrixXd F = build_feature_matrix(X);
    const Eigen::VectorXd resid = y - F * h.beta;
    const Eigen::MatrixXd Cinv = C.fullPivLu().inverse();
    const double mean = build_features(q).dot(h.beta) + k.dot(Cinv * resid);
    const double var =
        h.signal_variance + h.nugget_variance - k.dot(Cinv * k);
    return {mean, var};
  }
};

}  // namespace

TEST_CASE("build_features") {
  SECTION("d = 1") {
    ParameterPoint p(1);
    p << 2.0;
    const Eigen::VectorXd f = build_features(p);
    REQUIRE(f.size() == 3);
    REQUIRE(f[0] == 1.0);
    REQUIRE(f[1] == 2.0);
    REQUIRE(f[2] == 4.0);
  }
  SECTION("d = 2 with interaction") {
    ParameterPoint p(2);
    p << 1.0, 3.0;
    const Eigen::VectorXd f = build_features(p);
    REQUIRE(f.size() == 6);
    REQUIRE(f[0] == 1.0);
    REQUIRE(f[1] == 1.0);
    REQUIRE(f[2] == 3.0);
    REQUIRE(f[3] == 1.0);
    REQUIRE(f[4] == 9.0);
    REQUIRE(f[5] == 3.0);
  }
  SECTION("d = 3 has length 10") {
    ParameterPoint p(3);
    p << 1.0, 2.0, 3.0;
    REQUIRE(build_features(p).size() == 10);
  }
}

TEST_CASE("trim_training_data") {
  RngStream rng(1, 1);
  SECTION("fraction 0 is the identity") {
    const auto d = make_dataset(random_inputs(10, 2, rng),
                                Eigen::VectorXd::LinSpaced(10, -5.0, 4.0));
    const auto t = trim_training_data(d, 0.0);
    REQUIRE(t.size() == 10);
    REQUIRE(t.logliks == d.logliks);
  }
  SECTION("removes the lowest rows, stable order otherwise") {
    Eigen::VectorXd y(4);
    y << -10.0, -1.0, -5.0, -2.0;
    const auto d = make_dataset(random_inputs(4, 2, rng), y);
    const auto t = trim_training_data(d, 0.25);
    REQUIRE(t.size() == 3);
    REQUIRE(t.logliks[0] == -1.0);
    REQUIRE(t.logliks[1] == -5.0);
    REQUIRE(t.logliks[2] == -2.0);
  }
  SECTION("10% of 2000 leaves 1800") {
    Eigen::VectorXd y(2000);
    for (int i = 0; i < 2000; ++i) y[i] = rng.normal();
    const auto d = make_dataset(random_inputs(2000, 3, rng), y);
    REQUIRE(trim_training_data(d, 0.10).size() == 1800);
  }
}

TEST_CASE("fit_gp") {
  SECTION("exactly quadratic targets are reproduced at training points") {
    RngStream rng(2, 2);
    const Eigen::MatrixXd X = random_inputs(60, 2, rng);
    const Eigen::MatrixXd F = build_feature_matrix(X);
    Eigen::VectorXd beta_true(6);
    beta_true << 3.0, -1.0, 0.5, -0.25, -0.75, 0.4;
    const Eigen::VectorXd y = F * beta_true;
    const GpModel gp = fit_gp(make_dataset(X, y));
    for (int i = 0; i < X.rows(); ++i) {
      const double mean = gp.predict(X.row(i).transpose()).mean;
      REQUIRE(mean == Approx(y[i]).margin(1e-6));
    }
  }
  SECTION("white-noise targets recover the nugget within a factor of two") {
    const double noise_var = 0.09;
    RngStream rng(3, 3);
    double log_nugget_sum = 0.0;
    const int refits = 20;
    for (int rep = 0; rep < refits; ++rep) {
      const Eigen::MatrixXd X = random_inputs(80, 2, rng);
      const Eigen::MatrixXd F = build_feature_matrix(X);
      Eigen::VectorXd beta_true(6);
      beta_true << 1.0, 0.5, -0.5, 0.2, -0.1, 0.3;
      Eigen::VectorXd y = F * beta_true;
      for (int i = 0; i < y.size(); ++i)
        y[i] += rng.normal(0.0, std::sqrt(noise_var));
      GpFitOptions opts;
      opts.seed = 100 + static_cast<std::uint64_t>(rep);
      const GpModel gp = fit_gp(make_dataset(X, y), opts);
      // the model may split residual variance between nugget and a
      // short-scale signal; their sum is the honest noise estimate
      log_nugget_sum += std::log(gp.hyperparams().nugget_variance +
                                 gp.hyperparams().signal_variance);
    }
    const double geo_mean = std::exp(log_nugget_sum / refits);
    REQUIRE(geo_mean > noise_var / 2.0);
    REQUIRE(geo_mean < noise_var * 2.0);
  }
  SECTION("optimizer sanity: fitted marginal beats 100 random initial points") {
    RngStream rng(4, 4);
    const Eigen::MatrixXd X = random_inputs(50, 2, rng);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i)
      y[i] = std::sin(X(i, 0)) + 0.3 * X(i, 1) + rng.normal(0.0, 0.1);
    const auto data = make_dataset(X, y);
    const GpModel gp = fit_gp(data);
    const double fitted = gp.log_marginal();
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd ls(2);
      ls << std::exp(rng.normal(0.0, 1.5)), std::exp(rng.normal(0.0, 1.5));
      const double lm = GpModel::log_marginal_at(
          data, std::exp(rng.normal(0.0, 1.5)), ls, std::exp(rng.normal(-2.0, 1.5)));
      REQUIRE(fitted >= lm - 1e-9);
    }
  }
  SECTION("needs more rows than features") {
    RngStream rng(5, 5);
    const Eigen::MatrixXd X = random_inputs(5, 2, rng);
    REQUIRE_THROWS_AS(fit_gp(make_dataset(X, Eigen::VectorXd::Zero(5))),
                      std::invalid_argument);
  }
}

TEST_CASE("gp_predict") {
  RngStream rng(6, 6);
  const int n = 25;
  Eigen::MatrixXd X(n, 1);
  for (int i = 0; i < n; ++i) X(i, 0) = 0.5 * i;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = std::sin(0.4 * X(i, 0)) + 0.1 * X(i, 0);

  GpHyperparams h;
  h.signal_variance = 1.3;
  h.length_scales = Eigen::VectorXd::Constant(1, 0.9);
  h.nugget_variance = 1e-12;
  const GpModel gp = GpModel::with_hyperparams(make_dataset(X, y), h.signal_variance,
                                               h.length_scales, h.nugget_variance);

  SECTION("interpolation at training points in the nugget-free limit") {
    for (int i = 0; i < n; ++i) {
      const auto p = gp.predict(X.row(i).transpose());
      REQUIRE(p.mean == Approx(y[i]).margin(1e-6));
      REQUIRE(p.variance >= 0.0);
      REQUIRE(p.variance < 1e-6);
    }
  }
  SECTION("prior reversion far from the data") {
    ParameterPoint q(1);
    q << 1e5;
    const auto p = gp.predict(q);
    const double prior_mean = build_features(q).dot(gp.hyperparams().beta);
    REQUIRE(p.mean == Approx(prior_mean).margin(1e-6 * std::abs(prior_mean)));
    REQUIRE(p.variance ==
            Approx(h.signal_variance + h.nugget_variance).epsilon(1e-9));
  }
  SECTION("dense-solve oracle agreement at training inputs") {
    DenseOracle oracle{X, y, gp.hyperparams()};
    for (int i = 0; i < n; ++i) {
      const auto a = gp.predict(X.row(i).transpose());
      const auto b = oracle.predict(X.row(i).transpose());
      REQUIRE(a.mean == Approx(b.mean).margin(1e-8));
      REQUIRE(a.variance == Approx(std::max(b.variance, 0.0)).margin(1e-8));
    }
  }
  SECTION("predictive variance is nonnegative at random queries") {
    RngStream qrng(7, 7);
    for (int k = 0; k < 10000; ++k) {
      ParameterPoint q(1);
      q << qrng.normal(6.0, 8.0);
      REQUIRE(gp.predict(q).variance >= 0.0);
    }
  }
  SECTION("prediction is invariant to training-row order") {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = (i * 7) % n;
    Eigen::MatrixXd Xp(n, 1);
    Eigen::VectorXd yp(n);
    for (int i = 0; i < n; ++i) {
      Xp.row(i) = X.row(perm[static_cast<std::size_t>(i)]);
      yp[i] = y[perm[static_cast<std::size_t>(i)]];
    }
    const GpModel gp2 = GpModel::with_hyperparams(
        make_dataset(Xp, yp), h.signal_variance, h.length_scales, h.nugget_variance);
    for (double q0 : {0.7, 3.3, 9.1}) {
      ParameterPoint q(1);
      q << q0;
      REQUIRE(gp.predict(q).mean == Approx(gp2.predict(q).mean).margin(1e-8));
    }
  }
  SECTION("adding a training point at the query moves the mean to its target") {
    RngStream prng(8, 8);
    for (int rep = 0; rep < 5; ++rep) {
      ParameterPoint q(1);
      q << prng.uniform(1.0, 11.0);
      const double target = prng.normal(0.0, 1.0);
      Eigen::MatrixXd X2(n + 1, 1);
      Eigen::VectorXd y2(n + 1);
      X2.topRows(n) = X;
      y2.head(n) = y;
      X2(n, 0) = q[0];
      y2[n] = target;
      const GpModel gp2 = GpModel::with_hyperparams(
          make_dataset(X2, y2), h.signal_variance, h.length_scales, 1e-12);
      REQUIRE(gp2.predict(q).mean == Approx(target).margin(1e-5));
    }
  }
}

TEST_CASE("gp_sample_loglik") {
  RngStream rng(9, 9);
  const Eigen::MatrixXd X = random_inputs(30, 2, rng);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y[i] = X(i, 0) * X(i, 0) - X(i, 1);
  const GpModel gp = GpModel::with_hyperparams(
      make_dataset(X, y), 2.0, Eigen::VectorXd::Constant(2, 1.0), 0.05);

  SECTION("draw moments match the predictive within Monte Carlo error") {
    ParameterPoint q(2);
    q << 0.4, -0.6;
    const auto pred = gp.predict(q);
    RngStream drng(10, 10);
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto est = gp.sample_loglik(q, drng);
      REQUIRE(est.source == LogLikSource::GpDraw);
      s += est.value;
      s2 += est.value * est.value;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    const double se_mean = std::sqrt(pred.variance / n);
    REQUIRE(mean == Approx(pred.mean).margin(3.0 * se_mean));
    REQUIRE(var == Approx(pred.variance).epsilon(0.05));
  }
  SECTION("distinct stream positions give distinct draws") {
    ParameterPoint q(2);
    q << 0.0, 0.0;
    RngStream drng(11, 11);
    REQUIRE(gp.sample_loglik(q, drng).value != gp.sample_loglik(q, drng).value);
  }
  SECTION("vanishing variance collapses to the mean") {
    // far query on a model with negligible signal and nugget
    const GpModel tiny = GpModel::with_hyperparams(
        make_dataset(X, y), 1e-24, Eigen::VectorXd::Constant(2, 1.0), 1e-24);
    ParameterPoint q(2);
    q << 50.0, 50.0;
    RngStream drng(12, 12);
    const auto pred = tiny.predict(q);
    REQUIRE(tiny.sample_loglik(q, drng).value ==
            Approx(pred.mean).margin(1e-9));
  }
}

TEST_CASE("gp serialization round trip") {
  RngStream rng(13, 13);
  const Eigen::MatrixXd X = random_inputs(40, 3, rng);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) y[i] = X(i, 0) - 0.5 * X(i, 2) + rng.normal(0.0, 0.2);
  const GpModel gp = fit_gp(make_dataset(X, y));
  const GpModel back = gp_from_json(gp_to_json(gp));
  RngStream qrng(14, 14);
  for (int k = 0; k < 20; ++k) {
    ParameterPoint q(3);
    q << qrng.normal(), qrng.normal(), qrng.normal();
    REQUIRE(gp.predict(q).mean == Approx(back.predict(q).mean).margin(1e-10));
    REQUIRE(gp.predict(q).variance ==
            Approx(back.predict(q).variance).margin(1e-10));
  }
}
