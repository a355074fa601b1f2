#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sticky {

// splitmix64 step; used only to spread (seed, stream) pairs into
// well-separated engine seeds.
inline std::uint64_t splitmix64_next(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Well-separated 64-bit seed for a (seed, stream) pair.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64_next(s);
  s ^= 0x9e3779b97f4a7c15ULL * (stream + 1);
  return a ^ splitmix64_next(s);
}

// One independent mt19937_64 per (seed, stream); stream = replica index.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(derive_seed(seed, stream));
}

// Draws below use the raw engine output so trajectories are reproducible
// bit-for-bit across platforms (std::uniform_real_distribution is not).
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0,1)
}

inline double rand_exp(std::mt19937_64& g, double rate) {
  return -std::log1p(-uniform01(g)) / rate;
}

inline std::uint32_t uniform_below(std::mt19937_64& g, std::uint32_t n) {
  return static_cast<std::uint32_t>(
      (static_cast<unsigned __int128>(g()) * n) >> 64);
}

inline bool bernoulli(std::mt19937_64& g, double p) { return uniform01(g) < p; }

}  // namespace sticky
