#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

namespace damcmc {

namespace detail {

// SplitMix64 mixer, used to turn (seed, stream id) pairs into well-spread
// engine seeds so that distinct stream ids give statistically independent
// streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= stream_id * 0x9e3779b97f4a7c15ULL;
  std::uint64_t b = splitmix64(s);
  return a ^ (b + 0x632be59bd9b4e019ULL);
}

}  // namespace detail

/// A self-contained, reproducible random stream. The same (seed, stream id)
/// and the same sequence of calls always yield the same outputs; distinct
/// stream ids act as independent streams. Instances are single-owner and
/// must not be shared across threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed),
        stream_id_(stream_id),
        engine_(detail::mix_seed(seed, stream_id)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1). 53-bit mantissa, independent of the standard
  // library's unspecified distribution algorithms.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Integer uniform on {0, ..., n-1}.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) %
           n;
  }

  // Exact Poisson sampling by sequential inversion. Used only for data
  // simulation, where lambda stays modest; a normal approximation guards
  // against pathological inputs.
  std::uint64_t poisson(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda < 0");
    if (lambda == 0.0) return 0;
    if (lambda > 5000.0) {
      const double x = std::round(normal(lambda, std::sqrt(lambda)));
      return x < 0.0 ? 0 : static_cast<std::uint64_t>(x);
    }
    const double u = uniform01();
    double p = std::exp(-lambda);
    double cdf = p;
    std::uint64_t k = 0;
    const std::uint64_t cap = static_cast<std::uint64_t>(10.0 * lambda + 100);
    while (u >= cdf && k < cap) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }

  // Derives a fresh child stream from this stream's state. Consecutive
  // spawns give distinct, reproducible children; used for particle-filter
  // replicate workers.
  RngStream spawn() { return RngStream(engine_(), stream_id_ ^ 0x5851f42dULL); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

/// The engine partitions randomness by purpose so that algorithm variants
/// consuming the same decision sequence stay stream-aligned.
enum class StreamPurpose : std::uint64_t {
  Proposal = 1,
  ParticleFilter = 2,
  GpDraw = 3,
  StageDecision = 4,
  CaseSelection = 5,
  DataSim = 6,
};

inline RngStream make_stream(std::uint64_t seed, StreamPurpose purpose,
                             std::uint64_t family = 0) {
  return RngStream(seed, family * 64 + static_cast<std::uint64_t>(purpose));
}

/// One stream per purpose, the full set a sampler run needs.
struct StreamFamily {
  RngStream proposal;
  RngStream particle_filter;
  RngStream gp_draw;
  RngStream stage_decision;
  RngStream case_selection;

  StreamFamily(std::uint64_t seed, std::uint64_t family = 0)
      : proposal(make_stream(seed, StreamPurpose::Proposal, family)),
        particle_filter(
            make_stream(seed, StreamPurpose::ParticleFilter, family)),
        gp_draw(make_stream(seed, StreamPurpose::GpDraw, family)),
        stage_decision(
            make_stream(seed, StreamPurpose::StageDecision, family)),
        case_selection(
            make_stream(seed, StreamPurpose::CaseSelection, family)) {}
};

}  // namespace damcmc
