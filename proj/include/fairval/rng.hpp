#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fairval {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Per-operation seed from an experiment seed, an operation name and an
/// index (source, repeat, block...). Distinct names decorrelate streams.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view op,
                                    std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(seed ^ fnv1a(op));
  return splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace fairval
