#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace recnn {

/// xorshift64* (Vigna, 2016): 64-bit state, shifts 12/25/27, output multiplier
/// 0x2545F4914F6CDD1D. The seed is scrambled through one SplitMix64 step so
/// that any seed, including 0, yields a valid non-zero state. Both steps are
/// fully specified, so streams reproduce across implementations.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "xorshift64*";

  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t state() const { return state_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double next_double();
  double uniform(double lo, double hi);
  /// Standard normal via the Box-Muller transform.
  double normal();
  /// Uniform integer in [0, n) without modulo bias.
  std::size_t below(std::size_t n);

  /// Independent stream keyed by name, so that e.g. changing how many draws
  /// the sampler makes never perturbs weight initialization.
  Rng substream(std::string_view name) const;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace recnn
