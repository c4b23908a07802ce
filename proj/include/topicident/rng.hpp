#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace topicident {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic stream id from a master seed and a path of indices.
/// Streams for distinct paths are independent for scheduling purposes, so
/// results never depend on which worker ran which unit.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master ^ 0x6a09e667f3bcc908ULL);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x3c6ef372fe94f82bULL));
  return s;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed ^ 0xa54ff53a5f1d36f1ULL));
}

}  // namespace topicident
