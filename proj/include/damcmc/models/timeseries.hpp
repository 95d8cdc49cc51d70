#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace damcmc {

/// Observed series (y_t or z_t) at strictly increasing times, plus the known
/// initial latent state x0. x0 travels in a sidecar config, not the CSV.
struct TimeSeries {
  std::vector<double> times;
  std::vector<double> values;
  double x0 = 0.0;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }

  void validate() const {
    if (times.size() != values.size())
      throw std::invalid_argument("timeseries: times/values length mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw std::invalid_argument("timeseries: times not strictly increasing");
    for (double v : values)
      if (!std::isfinite(v))
        throw std::invalid_argument("timeseries: non-finite value");
  }

  /// Sampling interval before observation t (index-based; times[−1] := 0).
  double interval(std::size_t t) const {
    return t == 0 ? times[0] : times[t] - times[t - 1];
  }
};

}  // namespace damcmc
