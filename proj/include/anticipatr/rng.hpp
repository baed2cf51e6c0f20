#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace anticipatr {

// splitmix64 finalizer, used to derive independent seed streams.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives the seed for a named purpose (init, shuffle, borji, ...) so one run
// seed funnels every random stream.
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view purpose) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : purpose) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ull;
  }
  return mix_seed(seed ^ h);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view purpose) {
  return std::mt19937_64(stream_seed(seed, purpose));
}

}  // namespace anticipatr
