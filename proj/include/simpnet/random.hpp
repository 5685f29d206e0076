#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace simpnet {

/// Seeded generator used for every random draw in the toolkit.
///
/// Wraps std::mt19937_64 and derives doubles directly from the raw 64-bit
/// output so that streams are reproducible bit-for-bit independent of the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::string state() const;
  void set_state(const std::string& state);

  /// Child seed derived from a master seed and a path of indices
  /// (SplitMix64 folding). Used to give each query/planner/world its own
  /// stream so that execution order never changes results.
  static std::uint64_t derive(std::uint64_t master, std::initializer_list<std::uint64_t> path);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace simpnet
