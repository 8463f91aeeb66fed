#pragma once

#include <cstdint>
#include <initializer_list>

namespace subcpd {

/// Deterministic child seed for a numbered stream; used to split one user
/// seed into independent streams (bases, signal, noise, replications).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream) {
  auto mix = [](std::uint64_t z) {
    // splitmix64 finaliser
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t state = mix(base);
  for (std::uint64_t s : stream) {
    state = mix(state ^ mix(s + 0x632be59bd9b4e019ULL));
  }
  return state;
}

}  // namespace subcpd
