#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace softgem {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent generator for one named purpose ("init", "shuffle", ...) of a
// run. Two runs with the same seed draw identical numbers from a stream no
// matter what the other streams consumed.
inline Rng named_stream(std::uint64_t seed, std::string_view name) {
  return Rng(mix64(seed ^ mix64(fnv1a(name))));
}

} // namespace softgem
