#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace clex {

/// Root seed of an experiment. Every stochastic operation derives its own
/// substream from it, so results never depend on evaluation order.
struct RandomSeed {
  std::uint64_t value = 0;

  friend bool operator==(RandomSeed, RandomSeed) = default;
};

using Rng = std::mt19937_64;

/// FNV-1a of an operation name, used as the first component of a substream path.
constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for the substream identified by `path` (e.g. {tag, group, repeat}).
constexpr RandomSeed derive(RandomSeed root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(root.value);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p));
  return RandomSeed{h};
}

inline Rng make_rng(RandomSeed seed) { return Rng(seed.value); }

}  // namespace clex
