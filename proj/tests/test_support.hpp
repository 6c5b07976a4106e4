#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "happymine/core.hpp"

namespace happymine::testing {

/// Costs i/(i+1) for i = 1..n.
inline std::vector<double> harmonic_costs(std::size_t n = 40) {
  std::vector<double> c;
  for (std::size_t i = 1; i <= n; ++i) c.push_back(static_cast<double>(i) / static_cast<double>(i + 1));
  return c;
}

struct Instance {
  std::vector<double> costs;
  double Q = 1.0;
  double delta = 0.0;
};

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  std::vector<double> costs(std::size_t m, double lo = 0.01, double hi = 2.0) {
    std::vector<double> c(m);
    for (double& x : c) x = uniform(lo, hi);
    return c;
  }

  /// m in [2, max_m], costs in (0.01, 2), Q in [0.1, 10], delta in [0, 5].
  Instance instance(std::size_t max_m = 50) {
    Instance in;
    in.costs = costs(index(2, max_m));
    in.Q = uniform(0.1, 10.0);
    in.delta = uniform(0.0, 5.0);
    return in;
  }

  /// Multiples of 2^-10 in [0, 1), so sums are exact.
  double dyadic() { return static_cast<double>(index(0, 1023)) / 1024.0; }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace happymine::testing
