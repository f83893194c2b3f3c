#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egsage/flow.hpp"
#include "egsage/schema.hpp"
#include "egsage/split.hpp"

namespace egsage {

struct EncodedRecord {
    std::uint32_t src_ip = 0;
    std::uint16_t src_port = 0;
    std::uint32_t dst_ip = 0;
    std::uint16_t dst_port = 0;
    std::vector<double> features;
    bool is_attack = false;
    std::uint16_t class_id = 0;
    std::uint64_t flow_index = 0;
};

struct DatasetCounters {
    std::uint64_t row_errors = 0;
    std::uint64_t excluded_records = 0;
    std::uint64_t nan_values = 0;
    std::uint64_t inf_values = 0;
    std::uint64_t unknown_categories = 0;
    std::uint64_t comment_lines = 0;
};

// Encoded, anonymized, split dataset: the unit of exchange between encode,
// train and eval. Records kept by subsampling only; assignment is parallel
// to records. class_names[0] is the benign class.
struct EncodedDataset {
    FeatureSchema schema;
    std::vector<std::string> class_names;
    std::vector<EncodedRecord> records;
    std::vector<Assignment> assignment;
    std::uint64_t seed = 0;
    double train_fraction = 0.7;
    double subsample_fraction = 1.0;
    bool stratified = true;
    DatasetCounters counters;
    std::string config_echo;
    std::string tool_version;

    // Record indices with the given assignment, in record order.
    auto indices(Assignment which) const -> std::vector<std::size_t>;
    // FlowRecords for the given subset, for graph building.
    auto flow_records(const std::vector<std::size_t>& subset) const -> std::vector<FlowRecord>;
};

} // namespace egsage
