#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace relnet {

// All stochastic code goes through these helpers rather than the
// <random> distribution classes, whose output is implementation-defined.
// mt19937_64 itself is fully specified, so seeded runs are reproducible
// across platforms and standard libraries.

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent stream seed from a master seed and a stream path
/// (e.g. configuration index, shard index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc908ULL);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return h;
}

inline std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Uniform double in (0, 1]; never returns 0 so logs are safe.
inline double uniform01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

/// Geometric variate on {1, 2, ...} with per-step success probability p.
inline long sample_geometric(double p, Rng& rng) {
  if (p >= 1.0) return 1;
  double u = uniform01(rng);
  double v = std::floor(std::log(u) / std::log1p(-p));
  return 1 + static_cast<long>(v);
}

}  // namespace relnet
