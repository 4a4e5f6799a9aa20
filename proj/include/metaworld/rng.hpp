#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace metaworld::rng {

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Independent generator for (seed, named substream, index). Each world gets
/// its own index so draws do not depend on iteration order or thread count.
inline std::mt19937_64 stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  const std::uint64_t tag = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Seed for a named pipeline stage, derived from the scenario seed.
inline std::uint64_t derive(std::uint64_t seed, std::string_view name) {
  return stream(seed, name, 0)();
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace metaworld::rng
