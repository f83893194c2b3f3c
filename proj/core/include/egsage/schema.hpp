#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egsage/csv.hpp"
#include "egsage/flow.hpp"

namespace egsage {

enum class ColumnEncoding : std::uint8_t {
    numeric,
    one_hot,
    dropped,
};

enum class CategoricalMode : std::uint8_t {
    one_hot,
    drop,
};

struct ColumnSchema {
    std::string name;
    ColumnEncoding encoding = ColumnEncoding::dropped;
    // Numeric columns: population statistics of the finite training values.
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    // One-hot columns: category values, sorted.
    std::vector<std::string> categories;
    std::string drop_reason;

    auto dim() const -> std::size_t;
};

// Feature encoding fitted on the training split only. Encoding a record is a
// pure function of the schema, so test rows never influence the statistics.
struct FeatureSchema {
    std::vector<ColumnSchema> columns;
    std::size_t feature_dim = 0;
    CategoricalMode categorical_mode = CategoricalMode::one_hot;
    std::size_t max_categories = 32;
};

// Clamp and fallback counters accumulated while encoding.
struct EncodeCounters {
    std::size_t nan_values = 0;
    std::size_t inf_values = 0;
    std::size_t unknown_categories = 0;
};

// Fits per-column statistics on the given (training) records. A column whose
// non-empty cells all parse as doubles is numeric and will be z-scored with
// the population standard deviation; zero variance encodes to 0. Any other
// column is categorical: one-hot when its cardinality is at most
// max_categories (and mode allows it), dropped with a warning otherwise.
// Throws SchemaError when every column ends up dropped.
auto fit_schema(std::span<const RawRecord> train_records,
                const std::vector<std::string>& column_names,
                CategoricalMode mode = CategoricalMode::one_hot,
                std::size_t max_categories = 32) -> FeatureSchema;

// Encodes raw cells into the schema's feature vector. NaN (and unparseable)
// numeric cells encode to 0; +/-Inf clamps to the training max/min before
// z-scoring. Unknown categories encode to an all-zero block. Counters, when
// given, track each fallback.
auto encode_features(const FeatureSchema& schema,
                     const RawRecord& record,
                     EncodeCounters* counters = nullptr) -> std::vector<double>;

auto encode_record(const FeatureSchema& schema,
                   const RawRecord& record,
                   EncodeCounters* counters = nullptr) -> FlowRecord;

// Recovers the category index from a one-hot block, -1 when all zero.
auto decode_one_hot(const ColumnSchema& column, std::span<const double> block) -> int;

// Human-readable description of every column's fate.
auto schema_report(const FeatureSchema& schema) -> std::string;

} // namespace egsage
