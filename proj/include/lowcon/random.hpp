#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lowcon {

using Rng = std::mt19937_64;

/// Mixes a master seed with a list of stream tags into a child seed.
/// Replicate streams are derived this way so results do not depend on the
/// order in which replicates are executed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept;

}  // namespace lowcon
