#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace srcsel {

using Rng = std::mt19937_64;

/// Sub-seed for a (root, purpose, index) triple. Components that consume
/// randomness derive their own stream so results do not depend on call order.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(root, tag, index));
}

}  // namespace srcsel
