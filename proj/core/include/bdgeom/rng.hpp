#pragma once

#include <cstdint>
#include <limits>

namespace bdgeom {

/// Counter-based 64-bit generator. Output i of stream (seed, stream) is a
/// bijective mix of key + i * golden, so any replication can be reproduced
/// from (seed, index) alone regardless of how work is scheduled.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate);
  double normal();
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  std::uint64_t poisson(double mean);

  /// Independent child stream; children of distinct `sub` never overlap.
  CounterRng split(std::uint64_t sub) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace bdgeom
