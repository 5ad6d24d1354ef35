#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace chiron {

using Rng = std::mt19937_64;

/// Mixes a root seed with a stream name and trial index into an independent
/// seed. Every random consumer (split, init, restarts, attack) draws from its
/// own named stream so each can be reproduced in isolation.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

}  // namespace chiron
