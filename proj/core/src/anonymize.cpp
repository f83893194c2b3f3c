#include "egsage/anonymize.hpp"

#include <unordered_set>

#include "egsage/errors.hpp"
#include "egsage/rng.hpp"

namespace egsage {

namespace {

template <typename Record>
auto anonymize_impl(std::span<Record> records, std::uint64_t seed) -> AnonymizationMap {
    // First-appearance order keeps the mapping independent of container
    // internals, so a given seed and input always produce the same result.
    std::vector<std::uint32_t> distinct;
    std::unordered_set<std::uint32_t> seen;
    for (const Record& record : records) {
        if (seen.insert(record.src_ip).second) {
            distinct.push_back(record.src_ip);
        }
    }
    AnonymizationMap map = build_anonymization_map(distinct, seed);
    for (Record& record : records) {
        record.src_ip = map.mapping.at(record.src_ip);
    }
    return map;
}

} // namespace

auto build_anonymization_map(std::span<const std::uint32_t> distinct_sources, std::uint64_t seed)
    -> AnonymizationMap {
    if (distinct_sources.size() > kAnonPoolSize) {
        throw SchemaError("anonymize: " + std::to_string(distinct_sources.size()) +
                          " distinct source IPs exceed the replacement pool of " +
                          std::to_string(kAnonPoolSize));
    }
    AnonymizationMap map;
    map.seed = seed;
    Rng rng(seed);
    std::unordered_set<std::uint32_t> used;
    for (std::uint32_t source : distinct_sources) {
        std::uint32_t replacement = 0;
        do {
            replacement = kAnonPoolBase + static_cast<std::uint32_t>(rng.index(kAnonPoolSize));
        } while (!used.insert(replacement).second);
        map.mapping.emplace(source, replacement);
    }
    return map;
}

auto anonymize_sources(std::span<RawRecord> records, std::uint64_t seed) -> AnonymizationMap {
    return anonymize_impl(records, seed);
}

auto anonymize_sources(std::span<FlowRecord> records, std::uint64_t seed) -> AnonymizationMap {
    return anonymize_impl(records, seed);
}

} // namespace egsage
