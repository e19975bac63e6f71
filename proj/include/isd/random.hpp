#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>

namespace isd {

/// Portable 64-bit Mersenne twister. Boost's distributions are used on top of
/// it so that sampled values do not depend on the standard library vendor.
using Rng = boost::random::mt19937_64;

/// SplitMix64 finaliser; used to derive independent sub-stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Engine for sub-stream `stream` of `seed`. Different streams of the same
/// seed are statistically independent.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed ^ mix_seed(stream)));
}

}  // namespace isd
