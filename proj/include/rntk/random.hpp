#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rntk {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministically folds a base seed and any number of stream indices into
/// one 64-bit value, so sub-streams (per draw, per sequence, ...) are
/// independent of evaluation order.
inline std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = base;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t p : parts) {
    state ^= p + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
    out = splitmix64(state);
  }
  return out;
}

inline std::mt19937_64 seeded_rng(std::uint64_t base, std::initializer_list<std::uint64_t> parts = {}) {
  return std::mt19937_64(mix_seed(base, parts));
}

}  // namespace rntk
