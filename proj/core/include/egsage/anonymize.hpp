#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "egsage/csv.hpp"
#include "egsage/flow.hpp"

namespace egsage {

// Replacement pool for source addresses: 172.16.0.1 through 172.31.0.1
// inclusive, 983041 addresses.
inline constexpr std::uint32_t kAnonPoolBase = 0xAC100001u;
inline constexpr std::uint32_t kAnonPoolLast = 0xAC1F0001u;
inline constexpr std::size_t kAnonPoolSize =
    static_cast<std::size_t>(kAnonPoolLast - kAnonPoolBase) + 1;

struct AnonymizationMap {
    std::uint64_t seed = 0;
    // Original source IP to its replacement. Injective by construction.
    std::map<std::uint32_t, std::uint32_t> mapping;
};

// Builds a seeded random injective mapping for the given distinct sources.
// Throws SchemaError when there are more sources than pool addresses.
auto build_anonymization_map(std::span<const std::uint32_t> distinct_sources, std::uint64_t seed)
    -> AnonymizationMap;

// Rewrites every record's source IP in place and returns the mapping used.
// Records sharing a source IP share one replacement; destinations, ports,
// features and labels are untouched.
auto anonymize_sources(std::span<RawRecord> records, std::uint64_t seed) -> AnonymizationMap;
auto anonymize_sources(std::span<FlowRecord> records, std::uint64_t seed) -> AnonymizationMap;

} // namespace egsage
