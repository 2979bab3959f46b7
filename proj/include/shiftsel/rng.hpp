#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace shiftsel {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for child stream `index` of `parent`. Stable across platforms.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

/// FNV-1a 64-bit.
std::uint64_t hash_bytes(std::string_view bytes) noexcept;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(Rng& rng);

}  // namespace shiftsel
