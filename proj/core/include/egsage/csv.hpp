#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "egsage/flow.hpp"

namespace egsage {

// Maps dataset column names onto the four key columns and the two label
// columns. Defaults follow the NetFlow dataset family naming.
struct ColumnMap {
    std::string src_ip = "IPV4_SRC_ADDR";
    std::string src_port = "L4_SRC_PORT";
    std::string dst_ip = "IPV4_DST_ADDR";
    std::string dst_port = "L4_DST_PORT";
    std::string label = "Label";
    std::string attack_class = "Attack";
};

// Flow with its feature cells still in raw text form, pre schema encoding.
struct RawRecord {
    std::uint32_t src_ip = 0;
    std::uint16_t src_port = 0;
    std::uint32_t dst_ip = 0;
    std::uint16_t dst_port = 0;
    bool is_attack = false;
    std::string attack_class;
    std::vector<std::string> cells;
    std::uint64_t flow_index = 0;
};

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    std::vector<RawRecord> records;
    // Header columns that are not key or label columns, in file order.
    std::vector<std::string> feature_columns;
    // Malformed rows are skipped but counted and reported here.
    std::vector<RowError> row_errors;
    std::size_t comment_lines = 0;
};

// Reads a flow CSV. The header row is required and must contain every mapped
// column (SchemaError names the missing one). Lines starting with '#' are
// treated as comments. Rows with the wrong cell count, unparseable keys,
// ports outside [0, 65535], or a label contradicting the attack class are
// collected as row errors. An empty attack class cell is derived from the
// numeric label. With require_labels false the label columns may be absent
// from the header; such rows come back benign-labeled, for prediction
// inputs where ground truth does not exist.
auto parse_csv(const std::filesystem::path& path,
               const ColumnMap& columns = {},
               const std::string& benign_class = "Benign",
               bool require_labels = true) -> ParseResult;

// Splits one CSV line into cells, honoring double quotes.
auto split_csv_line(const std::string& line) -> std::vector<std::string>;

} // namespace egsage
