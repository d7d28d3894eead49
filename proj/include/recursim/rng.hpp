#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace recursim {

/// Random stream used by every engine. One instance per subject.
using RandomStream = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of subject `index`'s stream under `master_seed`.
///
/// seed_i = splitmix64(splitmix64(master_seed) + splitmix64(index)). The
/// value depends only on the pair, so a cohort is reproducible regardless of
/// worker count and visiting order.
constexpr std::uint64_t subject_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master_seed) + splitmix64(index ^ 0xd1b54a32d192ed03ULL));
}

inline RandomStream subject_stream(std::uint64_t master_seed, std::uint64_t index) {
  return RandomStream(subject_seed(master_seed, index));
}

/// Uniform draw on the open interval (0, 1) from the top 53 bits, so that
/// log(u) is always finite.
inline double uniform_open(RandomStream& rng) {
  const std::uint64_t bits = rng() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Exponential draw with the given rate, by inversion.
inline double exponential(RandomStream& rng, double rate) {
  return -std::log(uniform_open(rng)) / rate;
}

}  // namespace recursim
