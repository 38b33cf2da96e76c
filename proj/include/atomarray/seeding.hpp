#pragma once

#include <cstdint>
#include <initializer_list>

namespace atomarray {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seed derivation: every (base, k0, k1, ...) tuple maps to an
// independent stream seed, so work units can be seeded without coordination.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = mix64(base);
  for (std::uint64_t k : keys) s = mix64(s ^ mix64(k));
  return s;
}

// Stream tags keep disorder draws and jump thresholds decorrelated.
inline constexpr std::uint64_t kDisorderStream = 0xd150'4de4ULL;
inline constexpr std::uint64_t kJumpStream = 0x6a75'6d70ULL;

}  // namespace atomarray
