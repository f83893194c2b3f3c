#include "egsage/schema.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <sstream>

#include "egsage/errors.hpp"

namespace egsage {

namespace {

// Distinguishes "parses as a double" (numeric column candidate) from text.
// Empty cells are treated as missing numeric values rather than categories.
auto parse_numeric_cell(const std::string& cell) -> std::optional<double> {
    if (cell.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end != begin + cell.size()) {
        return std::nullopt;
    }
    return value;
}

} // namespace

auto ColumnSchema::dim() const -> std::size_t {
    switch (encoding) {
    case ColumnEncoding::numeric:
        return 1;
    case ColumnEncoding::one_hot:
        return categories.size();
    case ColumnEncoding::dropped:
        return 0;
    }
    return 0;
}

auto fit_schema(std::span<const RawRecord> train_records,
                const std::vector<std::string>& column_names,
                CategoricalMode mode,
                std::size_t max_categories) -> FeatureSchema {
    FeatureSchema schema;
    schema.categorical_mode = mode;
    schema.max_categories = max_categories;
    schema.columns.reserve(column_names.size());

    for (std::size_t col = 0; col < column_names.size(); ++col) {
        ColumnSchema column;
        column.name = column_names[col];

        bool numeric = true;
        for (const RawRecord& record : train_records) {
            if (!parse_numeric_cell(record.cells[col])) {
                numeric = false;
                break;
            }
        }

        if (numeric) {
            double total = 0.0;
            std::size_t finite_count = 0;
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (const RawRecord& record : train_records) {
                const double value = *parse_numeric_cell(record.cells[col]);
                if (!std::isfinite(value)) {
                    continue;
                }
                total += value;
                lo = std::min(lo, value);
                hi = std::max(hi, value);
                ++finite_count;
            }
            if (finite_count == 0) {
                column.encoding = ColumnEncoding::dropped;
                column.drop_reason = "no finite training values";
            } else {
                column.encoding = ColumnEncoding::numeric;
                column.mean = total / static_cast<double>(finite_count);
                // Second pass keeps the population variance stable for
                // large-magnitude counters.
                double squared_deviation = 0.0;
                for (const RawRecord& record : train_records) {
                    const double value = *parse_numeric_cell(record.cells[col]);
                    if (!std::isfinite(value)) {
                        continue;
                    }
                    const double centered = value - column.mean;
                    squared_deviation += centered * centered;
                }
                const double variance = squared_deviation / static_cast<double>(finite_count);
                column.stddev = variance > 0.0 ? std::sqrt(variance) : 0.0;
                column.min = lo;
                column.max = hi;
            }
        } else {
            std::set<std::string> distinct;
            for (const RawRecord& record : train_records) {
                distinct.insert(record.cells[col]);
                if (distinct.size() > max_categories) {
                    break;
                }
            }
            if (mode == CategoricalMode::drop) {
                column.encoding = ColumnEncoding::dropped;
                column.drop_reason = "categorical (categorical_mode = drop)";
            } else if (distinct.size() > max_categories) {
                column.encoding = ColumnEncoding::dropped;
                column.drop_reason = "cardinality above " + std::to_string(max_categories);
            } else {
                column.encoding = ColumnEncoding::one_hot;
                column.categories.assign(distinct.begin(), distinct.end());
            }
        }
        schema.feature_dim += column.dim();
        schema.columns.push_back(std::move(column));
    }

    if (schema.feature_dim == 0) {
        throw SchemaError("fit_schema: every column was dropped, no features remain");
    }
    return schema;
}

auto encode_features(const FeatureSchema& schema,
                     const RawRecord& record,
                     EncodeCounters* counters) -> std::vector<double> {
    if (record.cells.size() != schema.columns.size()) {
        throw DimensionError("encode_features: record has " + std::to_string(record.cells.size()) +
                             " cells, schema has " + std::to_string(schema.columns.size()) +
                             " columns");
    }
    std::vector<double> features;
    features.reserve(schema.feature_dim);
    for (std::size_t col = 0; col < schema.columns.size(); ++col) {
        const ColumnSchema& column = schema.columns[col];
        const std::string& cell = record.cells[col];
        switch (column.encoding) {
        case ColumnEncoding::dropped:
            break;
        case ColumnEncoding::numeric: {
            const auto parsed = parse_numeric_cell(cell);
            double value = parsed ? *parsed : std::numeric_limits<double>::quiet_NaN();
            if (std::isnan(value)) {
                if (counters != nullptr) {
                    ++counters->nan_values;
                }
                features.push_back(0.0);
                break;
            }
            if (std::isinf(value)) {
                if (counters != nullptr) {
                    ++counters->inf_values;
                }
                value = value > 0.0 ? column.max : column.min;
            }
            features.push_back(column.stddev > 0.0 ? (value - column.mean) / column.stddev : 0.0);
            break;
        }
        case ColumnEncoding::one_hot: {
            const auto it =
                std::lower_bound(column.categories.begin(), column.categories.end(), cell);
            const bool known = it != column.categories.end() && *it == cell;
            if (!known && counters != nullptr) {
                ++counters->unknown_categories;
            }
            for (std::size_t i = 0; i < column.categories.size(); ++i) {
                const bool hit =
                    known && i == static_cast<std::size_t>(it - column.categories.begin());
                features.push_back(hit ? 1.0 : 0.0);
            }
            break;
        }
        }
    }
    return features;
}

auto encode_record(const FeatureSchema& schema,
                   const RawRecord& record,
                   EncodeCounters* counters) -> FlowRecord {
    FlowRecord flow;
    flow.src_ip = record.src_ip;
    flow.src_port = record.src_port;
    flow.dst_ip = record.dst_ip;
    flow.dst_port = record.dst_port;
    flow.is_attack = record.is_attack;
    flow.attack_class = record.attack_class;
    flow.flow_index = record.flow_index;
    flow.features = encode_features(schema, record, counters);
    return flow;
}

auto decode_one_hot(const ColumnSchema& column, std::span<const double> block) -> int {
    if (column.encoding != ColumnEncoding::one_hot || block.size() != column.categories.size()) {
        throw DimensionError("decode_one_hot: block size does not match category count");
    }
    for (std::size_t i = 0; i < block.size(); ++i) {
        if (block[i] == 1.0) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

auto schema_report(const FeatureSchema& schema) -> std::string {
    std::ostringstream out;
    out << "feature dimension: " << schema.feature_dim << "\n";
    for (const ColumnSchema& column : schema.columns) {
        out << column.name << ": ";
        switch (column.encoding) {
        case ColumnEncoding::numeric:
            out << "numeric, mean " << column.mean << ", stddev " << column.stddev << ", range ["
                << column.min << ", " << column.max << "]";
            if (column.stddev == 0.0) {
                out << " (zero variance, encodes to 0)";
            }
            break;
        case ColumnEncoding::one_hot:
            out << "one-hot over " << column.categories.size() << " categories";
            break;
        case ColumnEncoding::dropped:
            out << "dropped (" << column.drop_reason << ")";
            break;
        }
        out << "\n";
    }
    return out.str();
}

} // namespace egsage
