#ifndef CROWD_RNG_HPP
#define CROWD_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace crowd {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Mixes any number of integer or string keys into a child seed.
template <typename... Keys>
std::uint64_t derive_seed(std::uint64_t base, const Keys&... keys) {
  std::uint64_t h = splitmix64(base);
  auto mix = [&h](const auto& key) {
    if constexpr (std::is_convertible_v<decltype(key), std::string_view>) {
      h = splitmix64(h ^ fnv1a(key));
    } else {
      h = splitmix64(h ^ static_cast<std::uint64_t>(key));
    }
  };
  (mix(keys), ...);
  return h;
}

}  // namespace crowd

#endif  // CROWD_RNG_HPP
