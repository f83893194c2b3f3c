#include "egsage/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "egsage/errors.hpp"
#include "egsage/rng.hpp"

namespace egsage {

auto SplitAssignment::count(Assignment which) const -> std::size_t {
    std::size_t n = 0;
    for (Assignment a : assignment) {
        if (a == which) {
            ++n;
        }
    }
    return n;
}

auto split_records(std::span<const RawRecord> records,
                   std::uint64_t seed,
                   double train_fraction,
                   double subsample_fraction,
                   bool stratified) -> SplitAssignment {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw SchemaError("split_records: train_fraction must lie in (0, 1]");
    }
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
        throw SchemaError("split_records: subsample_fraction must lie in (0, 1]");
    }

    SplitAssignment result;
    result.seed = seed;
    result.train_fraction = train_fraction;
    result.subsample_fraction = subsample_fraction;
    result.stratified = stratified;
    result.assignment.assign(records.size(), Assignment::train);

    Rng rng(seed);

    std::vector<std::size_t> retained(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        retained[i] = i;
    }
    if (subsample_fraction < 1.0) {
        const auto keep = static_cast<std::size_t>(
            std::llround(subsample_fraction * static_cast<double>(records.size())));
        rng.shuffle(retained);
        for (std::size_t i = keep; i < retained.size(); ++i) {
            result.assignment[retained[i]] = Assignment::excluded;
        }
        retained.resize(keep);
        std::sort(retained.begin(), retained.end());
    }

    // std::map keys keep class iteration order deterministic.
    std::map<std::string, std::vector<std::size_t>> pools;
    if (stratified) {
        for (std::size_t i : retained) {
            pools[records[i].attack_class].push_back(i);
        }
    } else {
        pools[""] = retained;
    }

    for (auto& [class_name, pool] : pools) {
        if (stratified && pool.size() == 1) {
            result.assignment[pool.front()] = Assignment::train;
            result.warnings.push_back("class '" + class_name +
                                      "' has a single record, placed in train");
            continue;
        }
        rng.shuffle(pool);
        const auto train_count = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(pool.size())));
        for (std::size_t i = 0; i < pool.size(); ++i) {
            result.assignment[pool[i]] = i < train_count ? Assignment::train : Assignment::test;
        }
    }
    return result;
}

} // namespace egsage
