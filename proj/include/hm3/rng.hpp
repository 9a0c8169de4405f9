#pragma once

#include <cstdint>
#include <string_view>

namespace hm3 {

// splitmix64 step, used as a stateless mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Counter-based uniform in [0,1). The value depends only on the key triple,
// never on call order or thread schedule.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t counter) {
  const std::uint64_t h = mix64(seed ^ mix64(stream ^ mix64(counter)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

} // namespace hm3
