#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace scgmm {

// All randomness flows through std::mt19937_64 engines whose seeds are
// derived from a user seed plus a purpose tag (and optional indices), so
// that independent consumers (shards, restarts, replications) draw from
// disjoint, reproducible streams regardless of execution order.
using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index, std::uint64_t index2);

inline Engine make_engine(std::uint64_t seed, std::string_view tag) {
  return Engine(derive_seed(seed, tag));
}

inline Engine make_engine(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index) {
  return Engine(derive_seed(seed, tag, index));
}

}  // namespace scgmm
