#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace damcmc {

struct TreeOptions {
  int max_depth = 6;
  int min_leaf = 10;
};

/// CART-style binary classification tree with Gini impurity splits. Emits a
/// hard class decision, no probability.
class DecisionTree {
 public:
  DecisionTree() = default;

  static DecisionTree fit(const Eigen::MatrixXd& X,
                          const std::vector<int>& y,
                          const TreeOptions& opts = {}) {
    if (X.rows() != static_cast<Eigen::Index>(y.size()) || y.empty())
      throw std::invalid_argument("tree: bad training shape");
    DecisionTree t;
    t.n_features_ = static_cast<int>(X.cols());
    std::vector<Eigen::Index> rows(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) rows[i] = static_cast<Eigen::Index>(i);
    t.build(X, y, rows, 0, opts);
    return t;
  }

  int classify(const Eigen::VectorXd& x) const {
    if (nodes_.empty()) throw std::runtime_error("tree: not fitted");
    if (x.size() != n_features_)
      throw std::invalid_argument("tree: feature dimension mismatch");
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].leaf) {
      const Node& nd = nodes_[static_cast<std::size_t>(i)];
      i = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(i)].cls;
  }

  double training_accuracy(const Eigen::MatrixXd& X,
                           const std::vector<int>& y) const {
    int hits = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (classify(X.row(i).transpose()) == y[static_cast<std::size_t>(i)]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(X.rows());
  }

  int depth() const {
    int d = 0;
    for (const auto& nd : nodes_) d = std::max(d, nd.depth);
    return d;
  }

  struct Node {
    bool leaf = true;
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    int cls = 0;
    int depth = 0;
  };
  const std::vector<Node>& nodes() const { return nodes_; }
  int feature_count() const { return n_features_; }

  // serialization support
  static DecisionTree from_nodes(std::vector<Node> nodes, int n_features) {
    DecisionTree t;
    t.nodes_ = std::move(nodes);
    t.n_features_ = n_features;
    return t;
  }

 private:
  static double gini(int c1, int total) {
    if (total == 0) return 0.0;
    const double p = static_cast<double>(c1) / static_cast<double>(total);
    return 2.0 * p * (1.0 - p);
  }

  int build(const Eigen::MatrixXd& X, const std::vector<int>& y,
            const std::vector<Eigen::Index>& rows, int depth,
            const TreeOptions& opts) {
    int ones = 0;
    for (Eigen::Index r : rows) ones += y[static_cast<std::size_t>(r)];
    const int n = static_cast<int>(rows.size());
    const int majority = 2 * ones >= n ? 1 : 0;

    Node node;
    node.depth = depth;
    node.cls = majority;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);

    const bool pure = (ones == 0 || ones == n);
    if (pure || depth >= opts.max_depth || n < 2 * opts.min_leaf) return id;

    // best Gini split over all features and midpoints
    int best_feat = -1;
    double best_thresh = 0.0, best_score = gini(ones, n);
    for (int f = 0; f < n_features_; ++f) {
      std::vector<std::pair<double, int>> vals;
      vals.reserve(rows.size());
      for (Eigen::Index r : rows)
        vals.emplace_back(X(r, f), y[static_cast<std::size_t>(r)]);
      std::sort(vals.begin(), vals.end());
      int left_ones = 0;
      for (int i = 0; i + 1 < n; ++i) {
        left_ones += vals[static_cast<std::size_t>(i)].second;
        const int left_n = i + 1;
        if (left_n < opts.min_leaf || n - left_n < opts.min_leaf) continue;
        if (vals[static_cast<std::size_t>(i)].first ==
            vals[static_cast<std::size_t>(i + 1)].first)
          continue;
        const double score =
            (static_cast<double>(left_n) * gini(left_ones, left_n) +
             static_cast<double>(n - left_n) * gini(ones - left_ones, n - left_n)) /
            static_cast<double>(n);
        if (score < best_score - 1e-12) {
          best_score = score;
          best_feat = f;
          best_thresh = 0.5 * (vals[static_cast<std::size_t>(i)].first +
                               vals[static_cast<std::size_t>(i + 1)].first);
        }
      }
    }
    if (best_feat < 0) return id;  // no improving split: stay a leaf

    std::vector<Eigen::Index> left_rows, right_rows;
    for (Eigen::Index r : rows)
      (X(r, best_feat) <= best_thresh ? left_rows : right_rows).push_back(r);
    if (left_rows.empty() || right_rows.empty()) return id;

    nodes_[static_cast<std::size_t>(id)].leaf = false;
    nodes_[static_cast<std::size_t>(id)].feature = best_feat;
    nodes_[static_cast<std::size_t>(id)].threshold = best_thresh;
    const int left_id = build(X, y, left_rows, depth + 1, opts);
    nodes_[static_cast<std::size_t>(id)].left = left_id;
    const int right_id = build(X, y, right_rows, depth + 1, opts);
    nodes_[static_cast<std::size_t>(id)].right = right_id;
    return id;
  }

  std::vector<Node> nodes_;
  int n_features_ = 0;
};

}  // namespace damcmc
