#pragma once

#include <cstdint>
#include <string_view>

namespace objflow {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// FNV-1a, used to turn stage names into stream tags.
inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Independent stream seed for (master, tag, counter). Streams for different
/// tags or counters do not depend on each other.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t counter = 0) {
  return splitmix64(splitmix64(master ^ fnv1a(tag)) + counter);
}

}  // namespace objflow
