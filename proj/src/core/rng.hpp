#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace avds {

// splitmix64 finalizer. Used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter scheme for per-trial seeds: seed(master, a, b) =
// mix64(mix64(mix64(master) ^ a) ^ b). Stable across releases; reports
// record the derived values.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0) {
  return mix64(mix64(mix64(master) ^ a) ^ b);
}

// Thin wrapper over mt19937_64 with platform-independent draws (the
// std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  double sign() { return (engine_() >> 63) ? -1.0 : 1.0; }

  double exponential() { return -std::log1p(-uniform()); }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace avds
