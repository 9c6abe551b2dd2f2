#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gennet {

using Rng = std::mt19937_64;

/// Labels for independent random streams derived from the master seed.
enum class StreamTag : std::uint64_t {
  initialization = 1,
  selection = 2,
  breeding = 3,
  request_seed = 4,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC908ull;
  for (auto p : parts) h = splitmix64(h ^ p);
  return h;
}

/// Stream for (master seed, tag, a, b). Streams never share state, so work
/// items that each own one can run in any order.
inline Rng make_stream(std::uint64_t master_seed, StreamTag tag, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
  return Rng(mix_seed({master_seed, static_cast<std::uint64_t>(tag), a, b}));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace gennet
