#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "damcmc/core/types.hpp"
#include "damcmc/models/timeseries.hpp"
#include "damcmc/surrogate/dataset.hpp"

namespace damcmc {

namespace detail {

/// Shortest round-trip-exact decimal representation of a double.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace detail

inline void write_timeseries_csv(const TimeSeries& ts,
                                 const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  f << "time,value\n";
  for (std::size_t i = 0; i < ts.size(); ++i)
    f << detail::fmt_double(ts.times[i]) << ','
      << detail::fmt_double(ts.values[i]) << '\n';
}

inline TimeSeries read_timeseries_csv(const std::filesystem::path& path,
                                      double x0 = 0.0) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for read: " + path.string());
  TimeSeries ts;
  ts.x0 = x0;
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("empty data file: " + path.string());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2)
      throw std::runtime_error("malformed data row in " + path.string());
    ts.times.push_back(std::stod(cells[0]));
    ts.values.push_back(std::stod(cells[1]));
  }
  ts.validate();
  return ts;
}

/// Chain CSV: one row per iteration with coordinates, the tracked
/// log-likelihood (and its source), and the per-iteration event fields.
inline void write_chain_csv(const ChainResult& chain,
                            const std::vector<std::string>& param_names,
                            const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  f << "iter";
  for (const auto& n : param_names) f << ',' << n;
  f << ",loglik,loglik_source,mh_branch,stage1_passed,case,pf_calls,accepted\n";
  for (std::size_t r = 0; r < chain.size(); ++r) {
    f << r;
    const auto& s = chain.samples[r];
    for (Eigen::Index j = 0; j < s.size(); ++j)
      f << ',' << detail::fmt_double(s[j]);
    const auto& ll = chain.logliks[r];
    const char* src = ll.source == LogLikSource::ParticleFilter ? "pf"
                      : ll.source == LogLikSource::GpDraw       ? "gp"
                                                                : "exact";
    const auto& ev = chain.events[r];
    f << ',' << detail::fmt_double(ll.value) << ',' << src << ','
      << (ev.used_mh_branch ? 1 : 0) << ',' << (ev.stage1_passed ? 1 : 0)
      << ',';
    if (ev.selected_case)
      f << static_cast<int>(*ev.selected_case);
    f << ',' << ev.pf_calls << ',' << (ev.accepted ? 1 : 0) << '\n';
  }
}

inline ChainResult read_chain_csv(const std::filesystem::path& path, int dim) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for read: " + path.string());
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("empty chain file: " + path.string());
  ChainResult chain;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) < dim + 8)
      throw std::runtime_error("malformed chain row in " + path.string());
    ParameterPoint p(dim);
    for (int j = 0; j < dim; ++j) p[j] = std::stod(cells[1 + static_cast<std::size_t>(j)]);
    LogLikEstimate ll;
    ll.value = std::stod(cells[static_cast<std::size_t>(dim) + 1]);
    const std::string& src = cells[static_cast<std::size_t>(dim) + 2];
    ll.source = src == "pf"   ? LogLikSource::ParticleFilter
                : src == "gp" ? LogLikSource::GpDraw
                              : LogLikSource::Exact;
    IterationEvent ev;
    ev.used_mh_branch = cells[static_cast<std::size_t>(dim) + 3] == "1";
    ev.stage1_passed = cells[static_cast<std::size_t>(dim) + 4] == "1";
    const std::string& cs = cells[static_cast<std::size_t>(dim) + 5];
    if (!cs.empty()) ev.selected_case = static_cast<CaseLabel>(std::stoi(cs));
    ev.pf_calls = std::stoi(cells[static_cast<std::size_t>(dim) + 6]);
    ev.accepted = cells[static_cast<std::size_t>(dim) + 7] == "1";
    chain.samples.push_back(std::move(p));
    chain.logliks.push_back(ll);
    chain.events.push_back(ev);
  }
  return chain;
}

/// Training data CSV: theta coordinates, proposal log-likelihood, then the
/// chain-aligned state and its log-likelihood.
inline void write_training_csv(const TrainingDataset& data,
                               const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  const Eigen::Index d = data.dimension();
  f << "row";
  for (Eigen::Index j = 0; j < d; ++j) f << ",theta_" << j;
  f << ",loglik";
  if (data.has_chain_aligned) {
    for (Eigen::Index j = 0; j < d; ++j) f << ",chain_theta_" << j;
    f << ",chain_loglik";
  }
  f << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    f << i;
    for (Eigen::Index j = 0; j < d; ++j)
      f << ',' << detail::fmt_double(data.proposals(i, j));
    f << ',' << detail::fmt_double(data.logliks[i]);
    if (data.has_chain_aligned) {
      for (Eigen::Index j = 0; j < d; ++j)
        f << ',' << detail::fmt_double(data.chain_thetas(i, j));
      f << ',' << detail::fmt_double(data.chain_logliks[i]);
    }
    f << '\n';
  }
}

inline TrainingDataset read_training_csv(const std::filesystem::path& path,
                                         int dim) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for read: " + path.string());
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("empty training file: " + path.string());
  const bool aligned =
      line.find("chain_loglik") != std::string::npos;
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<double> r;
    for (std::size_t i = 1; i < cells.size(); ++i) r.push_back(std::stod(cells[i]));
    rows.push_back(std::move(r));
  }
  TrainingDataset data;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  data.proposals.resize(n, dim);
  data.logliks.resize(n);
  data.has_chain_aligned = aligned;
  if (aligned) {
    data.chain_thetas.resize(n, dim);
    data.chain_logliks.resize(n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    const std::size_t want = static_cast<std::size_t>(aligned ? 2 * dim + 2 : dim + 1);
    if (r.size() != want)
      throw std::runtime_error("malformed training row in " + path.string());
    for (int j = 0; j < dim; ++j) data.proposals(i, j) = r[static_cast<std::size_t>(j)];
    data.logliks[i] = r[static_cast<std::size_t>(dim)];
    if (aligned) {
      for (int j = 0; j < dim; ++j)
        data.chain_thetas(i, j) = r[static_cast<std::size_t>(dim + 1 + j)];
      data.chain_logliks[i] = r[static_cast<std::size_t>(2 * dim + 1)];
    }
  }
  return data;
}

}  // namespace damcmc
