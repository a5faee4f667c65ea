#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spinelab {

/// SplitMix64 finalizer; used to derive independent per-path seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Random stream owned by exactly one path.
///
/// The stream for path `index` under `master_seed` depends only on that pair,
/// so an ensemble is reproducible no matter how paths are scheduled on
/// threads. Draw transforms are written out here rather than taken from
/// <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t master_seed, std::uint64_t index)
      : engine_(splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL))) {}

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Exponential with unit rate.
  double exponential() noexcept { return -std::log(uniform()); }

  /// Index k with probability weights[k] / total.
  template <typename Weights>
  std::size_t categorical(const Weights& weights, double total) noexcept {
    double target = uniform() * total;
    std::size_t last = 0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(weights.size()); ++k) {
      if (weights[k] <= 0.0) continue;
      last = k;
      target -= weights[k];
      if (target < 0.0) return k;
    }
    return last;
  }

  /// Poisson count by inversion; means here are small (segment rates).
  std::uint64_t poisson(double mean) noexcept {
    if (mean <= 0.0) return 0;
    if (mean > 30.0) {
      // Sum of exponentials: count arrivals of a unit-rate process before `mean`.
      std::uint64_t n = 0;
      double t = exponential();
      while (t < mean) {
        ++n;
        t += exponential();
      }
      return n;
    }
    const double limit = std::exp(-mean);
    std::uint64_t n = 0;
    double p = uniform();
    while (p > limit) {
      ++n;
      p *= uniform();
    }
    return n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spinelab
