#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "damcmc/caseselect/labels.hpp"
#include "damcmc/caseselect/logistic.hpp"
#include "damcmc/caseselect/selector.hpp"
#include "damcmc/caseselect/tree.hpp"
#include "damcmc/io/container.hpp"
#include "damcmc/surrogate/gp.hpp"

using namespace damcmc;

namespace {

LabeledCases labels_from(const std::vector<CaseLabel>& labels, int d = 2) {
  LabeledCases lc;
  lc.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), d + 1);
  lc.labels = labels;
  return lc;
}

std::vector<CaseLabel> repeat_cases(int c1, int c2, int c3, int c4) {
  std::vector<CaseLabel> v;
  for (int i = 0; i < c1; ++i) v.push_back(CaseLabel::Case1);
  for (int i = 0; i < c2; ++i) v.push_back(CaseLabel::Case2);
  for (int i = 0; i < c3; ++i) v.push_back(CaseLabel::Case3);
  for (int i = 0; i < c4; ++i) v.push_back(CaseLabel::Case4);
  return v;
}

/// Textbook IRLS, written independently of the library's Newton fit.
Eigen::VectorXd irls_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows(), p = X.cols() + 1;
  Eigen::MatrixXd Z(n, p);
  Z.col(0).setOnes();
  Z.rightCols(X.cols()) = X;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::VectorXd eta = Z * beta;
    Eigen::VectorXd w(n), zwork(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = 1.0 / (1.0 + std::exp(-eta[i]));
      const double wi = std::max(mu * (1.0 - mu), 1e-12);
      w[i] = wi;
      zwork[i] = eta[i] + (y[i] - mu) / wi;
    }
    const Eigen::MatrixXd ZtW = Z.transpose() * w.asDiagonal();
    const Eigen::VectorXd next = (ZtW * Z).ldlt().solve(ZtW * zwork);
    if ((next - beta).lpNorm<Eigen::Infinity>() < 1e-12) return next;
    beta = next;
  }
  return beta;
}

}  // namespace

TEST_CASE("classify_case matches the four orderings") {
  REQUIRE(classify_case(true, true) == CaseLabel::Case1);
  REQUIRE(classify_case(false, false) == CaseLabel::Case2);
  REQUIRE(classify_case(true, false) == CaseLabel::Case3);
  REQUIRE(classify_case(false, true) == CaseLabel::Case4);
}

TEST_CASE("label_training_cases against a brute-force comparator") {
  // near-noiseless surrogate trained on a known smooth function makes its
  // draws predictable, so the expected labels can be recomputed by hand
  RngStream rng(1, 1);
  const int n = 120;
  auto g = [](const ParameterPoint& p) { return -p[0] * p[0] - 0.5 * p[1] * p[1]; };

  Eigen::MatrixXd gx(2 * n, 2);
  Eigen::VectorXd gy(2 * n);
  TrainingDataset data;
  data.proposals.resize(n, 2);
  data.logliks.resize(n);
  data.chain_thetas.resize(n, 2);
  data.chain_logliks.resize(n);
  data.has_chain_aligned = true;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 2; ++j) {
      data.proposals(i, j) = rng.normal(0.0, 1.0);
      data.chain_thetas(i, j) = rng.normal(0.0, 1.0);
    }
    data.logliks[i] = rng.normal(0.0, 2.0);
    data.chain_logliks[i] = rng.normal(0.0, 2.0);
    gx.row(2 * i) = data.proposals.row(i);
    gx.row(2 * i + 1) = data.chain_thetas.row(i);
    gy[2 * i] = g(data.proposals.row(i).transpose());
    gy[2 * i + 1] = g(data.chain_thetas.row(i).transpose());
  }
  TrainingDataset gp_data;
  gp_data.proposals = gx;
  gp_data.logliks = gy;
  const GpModel gp = GpModel::with_hyperparams(
      gp_data, 1e-18, Eigen::VectorXd::Constant(2, 1.0), 1e-18);

  RngStream lrng(2, 2);
  const LabeledCases lc = label_training_cases(data, gp, lrng);
  REQUIRE(lc.size() == n);
  for (int i = 0; i < n; ++i) {
    const bool sur = g(data.proposals.row(i).transpose()) >
                     g(data.chain_thetas.row(i).transpose());
    const bool tru = data.logliks[i] > data.chain_logliks[i];
    REQUIRE(lc.labels[static_cast<std::size_t>(i)] == classify_case(sur, tru));
    REQUIRE(is_group13(lc.labels[static_cast<std::size_t>(i)]) == sur);
    REQUIRE(lc.features(i, 2) ==
            Approx(g(data.proposals.row(i).transpose()) -
                   g(data.chain_thetas.row(i).transpose()))
                .margin(1e-6));
  }
  SECTION("missing chain alignment is an error") {
    TrainingDataset bare;
    bare.proposals = data.proposals;
    bare.logliks = data.logliks;
    RngStream r2(3, 3);
    REQUIRE_THROWS_AS(label_training_cases(bare, gp, r2), std::invalid_argument);
  }
}

TEST_CASE("fit_biased_coin") {
  SECTION("relative frequencies from the labels") {
    const auto coin = fit_biased_coin(labels_from(repeat_cases(59, 91, 41, 9)));
    REQUIRE(coin.coin_p1() == Approx(0.59));
    REQUIRE(coin.coin_p2() == Approx(0.91));
    // complementary identities hold exactly
    REQUIRE(coin.coin_p1() + (1.0 - coin.coin_p1()) == 1.0);
    REQUIRE(coin.coin_p2() + (1.0 - coin.coin_p2()) == 1.0);
  }
  SECTION("all case 1, none case 3") {
    const auto coin = fit_biased_coin(labels_from(repeat_cases(25, 5, 0, 5)));
    REQUIRE(coin.coin_p1() == 1.0);
  }
  SECTION("empty group is an error") {
    REQUIRE_THROWS_AS(fit_biased_coin(labels_from(repeat_cases(10, 0, 5, 0))),
                      std::runtime_error);
  }
}

TEST_CASE("fit_logistic") {
  RngStream rng(4, 4);
  SECTION("labels independent of theta recover the class frequency") {
    const int n = 4000;
    LabeledCases lc;
    lc.features = Eigen::MatrixXd::Zero(n, 3);
    for (int i = 0; i < n; ++i) {
      lc.features(i, 0) = rng.normal();
      lc.features(i, 1) = rng.normal();
      lc.features(i, 2) = 1.0;  // every row in group 1/3
      lc.labels.push_back(rng.uniform01() < 0.7 ? CaseLabel::Case1
                                                : CaseLabel::Case3);
    }
    const LogisticModel m = fit_logistic_group(lc, true);
    Eigen::VectorXd origin = Eigen::VectorXd::Zero(2);
    REQUIRE(m.predict_prob(origin) == Approx(0.7).margin(0.02));
  }
  SECTION("perfect separation falls back to ridge and still classifies exactly") {
    const int n = 200;
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.normal() + (i % 2 == 0 ? 2.0 : -2.0);
      X(i, 0) = i % 2 == 0 ? std::abs(X(i, 0)) + 0.1 : -std::abs(X(i, 0)) - 0.1;
      y[i] = i % 2 == 0 ? 1.0 : 0.0;
    }
    const LogisticModel m = fit_logistic_binary(X, y);
    REQUIRE(m.ridge_fallback);
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      const double p = m.predict_prob(X.row(i).transpose());
      hits += ((p > 0.5) == (y[i] > 0.5)) ? 1 : 0;
    }
    REQUIRE(hits == n);
  }
  SECTION("coefficients match an independent IRLS oracle") {
    const int n = 200;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.normal();
      X(i, 1) = rng.normal();
      const double p = 1.0 / (1.0 + std::exp(-(0.3 + 0.8 * X(i, 0) - 0.5 * X(i, 1))));
      y[i] = rng.uniform01() < p ? 1.0 : 0.0;
    }
    const LogisticModel m = fit_logistic_binary(X, y);
    REQUIRE_FALSE(m.ridge_fallback);
    const Eigen::VectorXd oracle = irls_oracle(X, y);
    for (int j = 0; j < 3; ++j)
      REQUIRE(m.coef[j] == Approx(oracle[j]).margin(1e-4));
  }
}

TEST_CASE("fit_tree") {
  RngStream rng(5, 5);
  SECTION("single-split data gives a depth-1 tree with perfect accuracy") {
    const int n = 200;
    Eigen::MatrixXd X(n, 2);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.normal();
      X(i, 1) = rng.normal();
      y[static_cast<std::size_t>(i)] = X(i, 0) > 0.0 ? 1 : 0;
    }
    const DecisionTree t = DecisionTree::fit(X, y);
    REQUIRE(t.depth() == 1);
    REQUIRE(t.training_accuracy(X, y) == 1.0);
  }
  SECTION("majority-only data is a root leaf") {
    Eigen::MatrixXd X(30, 2);
    std::vector<int> y(30, 1);
    for (int i = 0; i < 30; ++i) {
      X(i, 0) = rng.normal();
      X(i, 1) = rng.normal();
    }
    const DecisionTree t = DecisionTree::fit(X, y);
    REQUIRE(t.depth() == 0);
    Eigen::VectorXd q(2);
    q << 100.0, -100.0;
    REQUIRE(t.classify(q) == 1);
  }
  SECTION("tree beats logistic on an XOR pattern") {
    const int n = 600;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd ylst(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.normal() + (rng.uniform01() < 0.5 ? 1.5 : -1.5);
      X(i, 1) = rng.normal() + (rng.uniform01() < 0.5 ? 1.5 : -1.5);
      const int label = (X(i, 0) > 0.0) != (X(i, 1) > 0.0) ? 1 : 0;
      y[static_cast<std::size_t>(i)] = label;
      ylst[i] = label;
    }
    const DecisionTree t = DecisionTree::fit(X, y);
    const LogisticModel lm = fit_logistic_binary(X, ylst);
    int lm_hits = 0;
    for (int i = 0; i < n; ++i)
      lm_hits += ((lm.predict_prob(X.row(i).transpose()) > 0.5) ==
                  (y[static_cast<std::size_t>(i)] == 1))
                     ? 1
                     : 0;
    const double lm_acc = static_cast<double>(lm_hits) / n;
    REQUIRE(t.training_accuracy(X, y) > lm_acc);
    REQUIRE(t.training_accuracy(X, y) > 0.85);
  }
  SECTION("depth respects the configured limit") {
    const int n = 500;
    Eigen::MatrixXd X(n, 1);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.normal();
      y[static_cast<std::size_t>(i)] = rng.uniform01() < 0.5 ? 1 : 0;
    }
    TreeOptions opts;
    opts.max_depth = 3;
    const DecisionTree t = DecisionTree::fit(X, y, opts);
    REQUIRE(t.depth() <= 3);
  }
}

TEST_CASE("select_case") {
  ParameterPoint theta(2);
  theta << 0.5, -0.5;
  SECTION("deterministic coin extremes") {
    RngStream rng(6, 6);
    const auto sure1 = CaseSelector::biased_coin(1.0, 0.5);
    for (int i = 0; i < 50; ++i)
      REQUIRE(select_case(sure1, theta, 0.4, true, rng) == CaseLabel::Case1);
    const auto sure4 = CaseSelector::biased_coin(0.5, 0.0);
    for (int i = 0; i < 50; ++i)
      REQUIRE(select_case(sure4, theta, -0.4, false, rng) == CaseLabel::Case4);
  }
  SECTION("empirical frequency matches the coin probability") {
    RngStream rng(7, 7);
    const auto coin = CaseSelector::biased_coin(0.59, 0.91);
    int c1 = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
      c1 += select_case(coin, theta, 0.4, true, rng) == CaseLabel::Case1 ? 1 : 0;
    REQUIRE(static_cast<double>(c1) / n == Approx(0.59).margin(0.005));
  }
  SECTION("group consistency holds for every selector kind") {
    RngStream rng(8, 8);
    std::vector<CaseSelector> selectors;
    selectors.push_back(CaseSelector::biased_coin(0.3, 0.8));
    {
      LabeledCases lc;
      const int n = 200;
      lc.features = Eigen::MatrixXd::Zero(n, 3);
      for (int i = 0; i < n; ++i) {
        lc.features(i, 0) = rng.normal();
        lc.features(i, 1) = rng.normal();
        lc.features(i, 2) = (i < n / 2) ? 1.0 : -1.0;
        const bool g13 = i < n / 2;
        const bool one = rng.uniform01() < 0.5;
        lc.labels.push_back(g13 ? (one ? CaseLabel::Case1 : CaseLabel::Case3)
                                : (one ? CaseLabel::Case2 : CaseLabel::Case4));
      }
      selectors.push_back(fit_logistic(lc));
      selectors.push_back(fit_tree(lc));
    }
    for (const auto& sel : selectors) {
      for (int i = 0; i < 200; ++i) {
        const bool higher = rng.uniform01() < 0.5;
        const CaseLabel c =
            select_case(sel, theta, higher ? 0.7 : -0.7, higher, rng);
        REQUIRE(is_group13(c) == higher);
      }
    }
  }
}

TEST_CASE("selector serialization round trips") {
  RngStream rng(9, 9);
  SECTION("coin") {
    const auto s = CaseSelector::biased_coin(0.37, 0.81);
    const auto back = selector_from_json(selector_to_json(s));
    REQUIRE(back.coin_p1() == 0.37);
    REQUIRE(back.coin_p2() == 0.81);
  }
  SECTION("logistic and tree agree with the original on fresh points") {
    LabeledCases lc;
    const int n = 300;
    lc.features = Eigen::MatrixXd::Zero(n, 3);
    for (int i = 0; i < n; ++i) {
      lc.features(i, 0) = rng.normal();
      lc.features(i, 1) = rng.normal();
      lc.features(i, 2) = rng.normal();
      const bool g13 = lc.features(i, 2) > 0.0;
      const bool one = lc.features(i, 0) > -0.2;
      lc.labels.push_back(g13 ? (one ? CaseLabel::Case1 : CaseLabel::Case3)
                              : (one ? CaseLabel::Case2 : CaseLabel::Case4));
    }
    for (auto fitfn : {+[](const LabeledCases& l) { return fit_logistic(l); },
                       +[](const LabeledCases& l) { return fit_tree(l, TreeOptions{}); }}) {
      const CaseSelector s = fitfn(lc);
      const CaseSelector back = selector_from_json(selector_to_json(s));
      for (int k = 0; k < 100; ++k) {
        SelectionContext ctx;
        ParameterPoint q(2);
        q << rng.normal(), rng.normal();
        ctx.theta_star = q;
        ctx.theta_prev = q;
        ctx.gp_log_ratio_star_minus_prev = rng.normal();
        ctx.gp_star_higher = ctx.gp_log_ratio_star_minus_prev > 0.0;
        RngStream r1(100 + static_cast<std::uint64_t>(k), 1);
        RngStream r2(100 + static_cast<std::uint64_t>(k), 1);
        REQUIRE(s.select(ctx, r1) == back.select(ctx, r2));
      }
    }
  }
}
