#include "gridlight/core/rng.hpp"

#include <stdexcept>

namespace gridlight {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

// splitmix64: decorrelates nearby seeds before they feed the engine.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), gen_(mix64(seed)) {}

std::uint64_t Rng::next_u64() { return gen_(); }

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

int Rng::next_int(int n) {
  if (n <= 0) throw std::invalid_argument("Rng::next_int: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = ~0ull - (~0ull % un);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return static_cast<int>(x % un);
}

Rng Rng::fork(std::string_view tag) const {
  return Rng(mix64(seed_ ^ fnv1a64(tag)));
}

}  // namespace gridlight
