#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

namespace damcmc::detail {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

/// Minimizes f over R^n from x0. Plain downhill simplex; good enough for the
/// low-dimensional hyperparameter searches used here.
inline NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, double step = 0.5, int max_evals = 400,
    double ftol = 1e-8) {
  const int n = static_cast<int>(x0.size());
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return f(x);
  };

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  for (int i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)][i] += step;
  for (int i = 0; i <= n; ++i) vals[static_cast<std::size_t>(i)] = eval(pts[static_cast<std::size_t>(i)]);

  auto order = [&] {
    std::vector<int> idx(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return vals[static_cast<std::size_t>(a)] < vals[static_cast<std::size_t>(b)]; });
    std::vector<Eigen::VectorXd> p2;
    std::vector<double> v2;
    for (int i : idx) {
      p2.push_back(pts[static_cast<std::size_t>(i)]);
      v2.push_back(vals[static_cast<std::size_t>(i)]);
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  while (evals < max_evals) {
    order();
    if (std::abs(vals.back() - vals.front()) <
        ftol * (std::abs(vals.front()) + ftol))
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[static_cast<std::size_t>(i)];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd worst = pts.back();
    const Eigen::VectorXd refl = centroid + (centroid - worst);
    const double f_refl = eval(refl);

    if (f_refl < vals.front()) {
      const Eigen::VectorXd expa = centroid + 2.0 * (centroid - worst);
      const double f_expa = eval(expa);
      if (f_expa < f_refl) {
        pts.back() = expa;
        vals.back() = f_expa;
      } else {
        pts.back() = refl;
        vals.back() = f_refl;
      }
    } else if (f_refl < vals[static_cast<std::size_t>(n - 1)]) {
      pts.back() = refl;
      vals.back() = f_refl;
    } else {
      const Eigen::VectorXd contr = centroid + 0.5 * (worst - centroid);
      const double f_contr = eval(contr);
      if (f_contr < vals.back()) {
        pts.back() = contr;
        vals.back() = f_contr;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[static_cast<std::size_t>(i)] =
              pts.front() + 0.5 * (pts[static_cast<std::size_t>(i)] - pts.front());
          vals[static_cast<std::size_t>(i)] = eval(pts[static_cast<std::size_t>(i)]);
        }
      }
    }
  }
  order();
  return {pts.front(), vals.front(), evals};
}

}  // namespace damcmc::detail
