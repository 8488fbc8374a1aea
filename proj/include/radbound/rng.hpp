#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace radbound::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (seed, ids...). Counter-based so
// that parallel and serial consumers of the same (seed, ids) agree.
inline std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  for (std::uint64_t id : ids) {
    s ^= id + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= splitmix64(s);
  }
  return h;
}

inline std::mt19937_64 engine(std::uint64_t seed) { return std::mt19937_64(seed); }

inline std::mt19937_64 engine(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  return std::mt19937_64(derive(seed, ids));
}

}  // namespace radbound::rng
