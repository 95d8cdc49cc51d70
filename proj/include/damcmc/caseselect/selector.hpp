#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "damcmc/caseselect/labels.hpp"
#include "damcmc/caseselect/logistic.hpp"
#include "damcmc/caseselect/tree.hpp"
#include "damcmc/core/rng.hpp"
#include "damcmc/core/types.hpp"

namespace damcmc {

/// Everything available when a case must be guessed for a fresh proposal:
/// the proposal itself, the state it competes against, and the surrogate
/// log-likelihood ratio. Particle-filter values are never part of this.
struct SelectionContext {
  ParameterPoint theta_star;
  ParameterPoint theta_prev;
  double gp_log_ratio_star_minus_prev = 0.0;
  bool gp_star_higher = false;
};

/// Case-selection model: a global biased coin, a pair of logistic
/// regressions on the proposal coordinates, or a pair of decision trees that
/// additionally see the surrogate log-ratio covariate. A custom callback
/// kind supports oracle selectors in tests.
class CaseSelector {
 public:
  enum class Kind { BiasedCoin, Logistic, Tree, Custom };
  using CustomFn = std::function<CaseLabel(const SelectionContext&, RngStream&)>;

  CaseSelector() = default;

  static CaseSelector biased_coin(double p1, double p2) {
    if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0))
      throw std::invalid_argument("selector: probabilities must be in [0,1]");
    CaseSelector s;
    s.kind_ = Kind::BiasedCoin;
    s.p1_ = p1;
    s.p2_ = p2;
    return s;
  }

  static CaseSelector logistic(LogisticModel m13, LogisticModel m24) {
    CaseSelector s;
    s.kind_ = Kind::Logistic;
    s.logit13_ = std::move(m13);
    s.logit24_ = std::move(m24);
    return s;
  }

  static CaseSelector tree(DecisionTree t13, DecisionTree t24) {
    CaseSelector s;
    s.kind_ = Kind::Tree;
    s.tree13_ = std::move(t13);
    s.tree24_ = std::move(t24);
    return s;
  }

  static CaseSelector custom(CustomFn fn) {
    CaseSelector s;
    s.kind_ = Kind::Custom;
    s.custom_ = std::move(fn);
    return s;
  }

  Kind kind() const { return kind_; }
  double coin_p1() const { return p1_; }
  double coin_p2() const { return p2_; }
  const LogisticModel& logistic13() const { return logit13_; }
  const LogisticModel& logistic24() const { return logit24_; }
  const DecisionTree& tree13() const { return tree13_; }
  const DecisionTree& tree24() const { return tree24_; }

  CaseLabel select(const SelectionContext& ctx, RngStream& rng) const {
    switch (kind_) {
      case Kind::BiasedCoin: {
        const double u = rng.uniform01();
        if (ctx.gp_star_higher)
          return u < p1_ ? CaseLabel::Case1 : CaseLabel::Case3;
        return u < p2_ ? CaseLabel::Case2 : CaseLabel::Case4;
      }
      case Kind::Logistic: {
        const double u = rng.uniform01();
        if (ctx.gp_star_higher) {
          const double p = logit13_.predict_prob(ctx.theta_star);
          return u < p ? CaseLabel::Case1 : CaseLabel::Case3;
        }
        const double p = logit24_.predict_prob(ctx.theta_star);
        return u < p ? CaseLabel::Case2 : CaseLabel::Case4;
      }
      case Kind::Tree: {
        Eigen::VectorXd x(ctx.theta_star.size() + 1);
        x.head(ctx.theta_star.size()) = ctx.theta_star;
        x[ctx.theta_star.size()] = ctx.gp_log_ratio_star_minus_prev;
        if (ctx.gp_star_higher)
          return tree13_.classify(x) == 1 ? CaseLabel::Case1 : CaseLabel::Case3;
        return tree24_.classify(x) == 1 ? CaseLabel::Case2 : CaseLabel::Case4;
      }
      case Kind::Custom:
        return custom_(ctx, rng);
    }
    throw std::logic_error("selector: unknown kind");
  }

 private:
  Kind kind_ = Kind::BiasedCoin;
  double p1_ = 0.5, p2_ = 0.5;
  LogisticModel logit13_, logit24_;
  DecisionTree tree13_, tree24_;
  CustomFn custom_;
};

/// Relative case frequencies from labeled training rows:
/// p1 = #1/(#1+#3), p2 = #2/(#2+#4).
inline CaseSelector fit_biased_coin(const LabeledCases& labels) {
  int c1 = 0, c2 = 0, c3 = 0, c4 = 0;
  for (CaseLabel c : labels.labels) {
    if (c == CaseLabel::Case1) ++c1;
    if (c == CaseLabel::Case2) ++c2;
    if (c == CaseLabel::Case3) ++c3;
    if (c == CaseLabel::Case4) ++c4;
  }
  if (c1 + c3 == 0 || c2 + c4 == 0)
    throw std::runtime_error(
        "fit_biased_coin: a case group is empty; harvest a longer training run");
  return CaseSelector::biased_coin(
      static_cast<double>(c1) / static_cast<double>(c1 + c3),
      static_cast<double>(c2) / static_cast<double>(c2 + c4));
}

namespace detail {

struct GroupData {
  Eigen::MatrixXd X_theta;  // proposal coordinates only
  Eigen::MatrixXd X_full;   // coordinates + surrogate log-ratio
  Eigen::VectorXd y;        // 1 for case 1 (group13) / case 2 (group24)
  std::vector<int> y_int;
};

inline GroupData split_group(const LabeledCases& labels, bool group13) {
  const Eigen::Index d = labels.theta_dimension();
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (is_group13(labels.labels[static_cast<std::size_t>(i)]) == group13)
      rows.push_back(i);
  GroupData g;
  g.X_theta.resize(static_cast<Eigen::Index>(rows.size()), d);
  g.X_full.resize(static_cast<Eigen::Index>(rows.size()), d + 1);
  g.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Eigen::Index i = rows[k];
    g.X_theta.row(static_cast<Eigen::Index>(k)) = labels.features.row(i).head(d);
    g.X_full.row(static_cast<Eigen::Index>(k)) = labels.features.row(i);
    const CaseLabel c = labels.labels[static_cast<std::size_t>(i)];
    const int one = (c == CaseLabel::Case1 || c == CaseLabel::Case2) ? 1 : 0;
    g.y[static_cast<Eigen::Index>(k)] = one;
    g.y_int.push_back(one);
  }
  return g;
}

}  // namespace detail

/// Per-group logistic regression on the proposal coordinates.
inline LogisticModel fit_logistic_group(const LabeledCases& labels, bool group13) {
  const auto g = detail::split_group(labels, group13);
  if (g.y.size() == 0)
    throw std::runtime_error("fit_logistic: empty case group");
  return fit_logistic_binary(g.X_theta, g.y);
}

inline CaseSelector fit_logistic(const LabeledCases& labels) {
  return CaseSelector::logistic(fit_logistic_group(labels, true),
                                fit_logistic_group(labels, false));
}

/// Per-group decision tree on coordinates plus the surrogate log-ratio.
inline DecisionTree fit_tree_group(const LabeledCases& labels, bool group13,
                                   const TreeOptions& opts = {}) {
  const auto g = detail::split_group(labels, group13);
  if (g.y_int.empty()) throw std::runtime_error("fit_tree: empty case group");
  return DecisionTree::fit(g.X_full, g.y_int, opts);
}

inline CaseSelector fit_tree(const LabeledCases& labels,
                             const TreeOptions& opts = {}) {
  return CaseSelector::tree(fit_tree_group(labels, true, opts),
                            fit_tree_group(labels, false, opts));
}

/// Operation-style adapter used by the samplers.
inline CaseLabel select_case(const CaseSelector& selector,
                             const ParameterPoint& theta_star,
                             double gp_log_ratio_star_minus_prev,
                             bool gp_star_higher, RngStream& rng) {
  SelectionContext ctx;
  ctx.theta_star = theta_star;
  ctx.theta_prev = theta_star;  // not used by the built-in selectors
  ctx.gp_log_ratio_star_minus_prev = gp_log_ratio_star_minus_prev;
  ctx.gp_star_higher = gp_star_higher;
  return selector.select(ctx, rng);
}

}  // namespace damcmc
