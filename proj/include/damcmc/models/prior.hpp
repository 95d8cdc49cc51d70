#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "damcmc/core/logmath.hpp"
#include "damcmc/core/rng.hpp"
#include "damcmc/core/types.hpp"

namespace damcmc {

/// Per-coordinate prior: Uniform(a, b) or Normal(mean, sd).
struct PriorComponent {
  enum class Kind { Uniform, Gauss } kind = Kind::Uniform;
  double a = 0.0;  // lower bound, or mean
  double b = 1.0;  // upper bound, or sd

  static PriorComponent uniform(double lo, double hi) {
    return {Kind::Uniform, lo, hi};
  }
  static PriorComponent gauss(double mean, double sd) {
    return {Kind::Gauss, mean, sd};
  }
};

struct PriorSpec {
  std::vector<PriorComponent> components;
  bool improper_flat = false;  // generic-target mode: prior == 1 everywhere

  static PriorSpec flat() {
    PriorSpec s;
    s.improper_flat = true;
    return s;
  }

  int dimension() const { return static_cast<int>(components.size()); }

  void validate() const {
    if (improper_flat) return;
    if (components.empty()) throw std::invalid_argument("prior: empty spec");
    for (const auto& c : components) {
      if (c.kind == PriorComponent::Kind::Uniform && !(c.a < c.b))
        throw std::invalid_argument("prior: uniform needs a < b");
      if (c.kind == PriorComponent::Kind::Gauss && !(c.b > 0.0))
        throw std::invalid_argument("prior: normal needs sd > 0");
    }
  }
};

/// Sum of per-coordinate log prior densities; -inf outside uniform support.
inline double eval_log_prior(const ParameterPoint& theta, const PriorSpec& spec) {
  if (spec.improper_flat) return 0.0;
  spec.validate();
  if (theta.size() != spec.dimension())
    throw std::invalid_argument("prior: dimension mismatch");
  double acc = 0.0;
  for (int j = 0; j < spec.dimension(); ++j) {
    const auto& c = spec.components[static_cast<std::size_t>(j)];
    const double x = theta[j];
    if (c.kind == PriorComponent::Kind::Uniform) {
      if (x < c.a || x > c.b) return kNegInf;
      acc += -std::log(c.b - c.a);
    } else {
      acc += log_normal_pdf(x, c.a, c.b);
    }
  }
  return acc;
}

/// One draw from the prior (used for scattered test points; not by samplers).
inline ParameterPoint sample_prior(const PriorSpec& spec, RngStream& rng) {
  spec.validate();
  if (spec.improper_flat)
    throw std::invalid_argument("prior: cannot sample an improper prior");
  ParameterPoint p(spec.dimension());
  for (int j = 0; j < spec.dimension(); ++j) {
    const auto& c = spec.components[static_cast<std::size_t>(j)];
    p[j] = c.kind == PriorComponent::Kind::Uniform ? rng.uniform(c.a, c.b)
                                                   : rng.normal(c.a, c.b);
  }
  return p;
}

}  // namespace damcmc
