#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egsage/csv.hpp"

namespace egsage {

enum class Assignment : std::uint8_t {
    train = 0,
    test = 1,
    // Removed by subsampling before the split.
    excluded = 2,
};

struct SplitAssignment {
    std::uint64_t seed = 0;
    double train_fraction = 0.7;
    double subsample_fraction = 1.0;
    bool stratified = true;
    // One entry per input record, in input order.
    std::vector<Assignment> assignment;
    std::vector<std::string> warnings;

    auto count(Assignment which) const -> std::size_t;
};

// Seeded train/test split. Subsampling (when subsample_fraction < 1) keeps a
// uniform random subset of exactly round(fraction * n) records, then the
// remainder is split per attack class when stratified, so class proportions
// carry over. A class with a single record goes to train with a warning.
// Same inputs and seed always produce the same assignment.
auto split_records(std::span<const RawRecord> records,
                   std::uint64_t seed,
                   double train_fraction = 0.7,
                   double subsample_fraction = 1.0,
                   bool stratified = true) -> SplitAssignment;

} // namespace egsage
