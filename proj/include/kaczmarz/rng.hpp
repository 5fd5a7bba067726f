#pragma once

#include <cstdint>
#include <random>

namespace kaczmarz {

/// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Sub-seed for stream `stream` of trial `trial` under master seed `seed`.
/// Streams separate the system draw, noise draw, start point and solver runs
/// of one trial so that adding a method does not perturb the others.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream = 0) {
  return mix_seed(mix_seed(mix_seed(seed) ^ trial) ^ (stream * 0x632be59bd9b4e019ULL));
}

/// The library-wide PRNG: 64-bit Mersenne Twister. Draw sequences are
/// reproducible for a given seed within one standard library implementation.
using Rng = std::mt19937_64;

}  // namespace kaczmarz
