#pragma once

#include <cstdint>
#include <random>

namespace attnspec {

std::uint64_t splitmix64(std::uint64_t x);

/// Engine for (master seed, trial, stream). Distinct triples give decorrelated
/// engines, so trials can run in any order on any thread.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream);

enum Stream : std::uint64_t { kNoise = 1, kSigns = 2, kTokens = 3, kRestarts = 4 };

}  // namespace attnspec
