#pragma once

#include <cstdint>
#include <random>

namespace rfk::rng {

// Named seed streams derived from the master seed. Adding a stream never
// perturbs draws of existing ones (counter-based derivation).
inline constexpr std::uint64_t kTrainIcs = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kFrequencies = 3;
inline constexpr std::uint64_t kTestIcs = 4;
inline constexpr std::uint64_t kDensityIcs = 5;
inline constexpr std::uint64_t kForecastIc = 6;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) + stream * 0x9E3779B97F4A7C15ULL);
}

inline std::uint64_t derive(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(derive(master, stream) + index * 0xD1B54A32D192ED03ULL);
}

inline std::mt19937_64 engine(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace rfk::rng
