#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "damcmc/caseselect/selector.hpp"
#include "damcmc/surrogate/gp.hpp"

namespace damcmc {

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

inline nlohmann::json tree_to_json(const DecisionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& nd : t.nodes()) {
    nodes.push_back({{"leaf", nd.leaf},
                     {"feature", nd.feature},
                     {"threshold", nd.threshold},
                     {"left", nd.left},
                     {"right", nd.right},
                     {"cls", nd.cls},
                     {"depth", nd.depth}});
  }
  return {{"nodes", std::move(nodes)}, {"n_features", t.feature_count()}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
  std::vector<DecisionTree::Node> nodes;
  for (const auto& nj : j.at("nodes")) {
    DecisionTree::Node nd;
    nd.leaf = nj.at("leaf").get<bool>();
    nd.feature = nj.at("feature").get<int>();
    nd.threshold = nj.at("threshold").get<double>();
    nd.left = nj.at("left").get<int>();
    nd.right = nj.at("right").get<int>();
    nd.cls = nj.at("cls").get<int>();
    nd.depth = nj.at("depth").get<int>();
    nodes.push_back(nd);
  }
  return DecisionTree::from_nodes(std::move(nodes), j.at("n_features").get<int>());
}

}  // namespace detail

inline nlohmann::json gp_to_json(const GpModel& gp) {
  const auto& h = gp.hyperparams();
  return {{"beta", detail::vector_to_json(h.beta)},
          {"signal_variance", h.signal_variance},
          {"length_scales", detail::vector_to_json(h.length_scales)},
          {"nugget_variance", h.nugget_variance},
          {"inputs", detail::matrix_to_json(gp.inputs())},
          {"targets", detail::vector_to_json(gp.targets())}};
}

inline GpModel gp_from_json(const nlohmann::json& j) {
  GpHyperparams h;
  h.beta = detail::vector_from_json(j.at("beta"));
  h.signal_variance = j.at("signal_variance").get<double>();
  h.length_scales = detail::vector_from_json(j.at("length_scales"));
  h.nugget_variance = j.at("nugget_variance").get<double>();
  return GpModel(std::move(h), detail::matrix_from_json(j.at("inputs")),
                 detail::vector_from_json(j.at("targets")));
}

inline nlohmann::json selector_to_json(const CaseSelector& s) {
  switch (s.kind()) {
    case CaseSelector::Kind::BiasedCoin:
      return {{"kind", "coin"}, {"p1", s.coin_p1()}, {"p2", s.coin_p2()}};
    case CaseSelector::Kind::Logistic:
      return {{"kind", "logistic"},
              {"coef13", detail::vector_to_json(s.logistic13().coef)},
              {"coef24", detail::vector_to_json(s.logistic24().coef)},
              {"ridge13", s.logistic13().ridge_fallback},
              {"ridge24", s.logistic24().ridge_fallback}};
    case CaseSelector::Kind::Tree:
      return {{"kind", "tree"},
              {"tree13", detail::tree_to_json(s.tree13())},
              {"tree24", detail::tree_to_json(s.tree24())}};
    case CaseSelector::Kind::Custom:
      throw std::invalid_argument("selector: custom selectors are not serializable");
  }
  throw std::logic_error("selector: unknown kind");
}

inline CaseSelector selector_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "coin")
    return CaseSelector::biased_coin(j.at("p1").get<double>(),
                                     j.at("p2").get<double>());
  if (kind == "logistic") {
    LogisticModel m13, m24;
    m13.coef = detail::vector_from_json(j.at("coef13"));
    m13.ridge_fallback = j.at("ridge13").get<bool>();
    m24.coef = detail::vector_from_json(j.at("coef24"));
    m24.ridge_fallback = j.at("ridge24").get<bool>();
    return CaseSelector::logistic(std::move(m13), std::move(m24));
  }
  if (kind == "tree")
    return CaseSelector::tree(detail::tree_from_json(j.at("tree13")),
                              detail::tree_from_json(j.at("tree24")));
  throw std::runtime_error("selector: unknown kind in container: " + kind);
}

/// Versioned container holding the fitted surrogate and case selector so the
/// pipeline phases can run as separate invocations.
struct ModelContainer {
  GpModel gp;
  CaseSelector selector;
};

inline void save_model_container(const ModelContainer& mc,
                                 const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "damcmc-model";
  j["version"] = 1;
  j["gp"] = gp_to_json(mc.gp);
  j["selector"] = selector_to_json(mc.selector);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  f << j.dump(1);
}

inline ModelContainer load_model_container(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f)
    throw std::runtime_error("cannot open model container: " + path.string() +
                             " (run the `fit` command first)");
  nlohmann::json j;
  f >> j;
  if (j.value("format", "") != "damcmc-model" || j.value("version", 0) != 1)
    throw std::runtime_error("unrecognized model container: " + path.string());
  return {gp_from_json(j.at("gp")), selector_from_json(j.at("selector"))};
}

}  // namespace damcmc
