#pragma once

#include <cstdint>
#include <vector>

namespace pixcurate {

// xoshiro256** (Blackman & Vigna), seeded through splitmix64. Every draw is
// defined by integer arithmetic only, so a seed yields the same stream on
// every platform and compiler.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();

  // Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound);

  // Uniform double in [0, 1) from the top 53 bits.
  double uniform();

 private:
  std::uint64_t s_[4];
};

// k distinct values drawn from [0, n) by a partial Fisher-Yates shuffle, in
// draw order.
std::vector<std::size_t> sample_without_replacement(Xoshiro256& rng, std::size_t n, std::size_t k);

}  // namespace pixcurate
