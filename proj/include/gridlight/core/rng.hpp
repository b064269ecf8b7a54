#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gridlight {

// 64-bit FNV-1a, used for deriving named RNG streams and hashing configs.
std::uint64_t fnv1a64(std::string_view data);

// Deterministic random stream.  All distribution math is done here rather
// than with std::uniform_*_distribution, whose output is not pinned down by
// the standard; this keeps runs reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double next_double();

  double uniform(double lo, double hi);

  // Uniform integer in [0, n); n must be positive.  Uses rejection sampling,
  // so the result is exactly uniform.
  int next_int(int n);

  // Child stream derived from this stream's seed and a tag.  Forking is a
  // function of (seed, tag) only, never of how much the parent has been
  // consumed, so adding a new stream does not disturb existing ones.
  Rng fork(std::string_view tag) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace gridlight
