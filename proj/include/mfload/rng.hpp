#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mfload {

using Rng = std::mt19937_64;

/// Derives an independent seed for the named substream of `seed`.
/// The same (seed, name) pair always yields the same value.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

inline Rng make_rng(std::uint64_t seed, std::string_view name) {
  return Rng{substream_seed(seed, name)};
}

}  // namespace mfload
