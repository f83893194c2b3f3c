#include "egsage/csv.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include "egsage/errors.hpp"

namespace egsage {

namespace {

auto parse_port(const std::string& text) -> std::optional<std::uint16_t> {
    if (text.empty()) {
        return std::nullopt;
    }
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value > 65535) {
        return std::nullopt;
    }
    return static_cast<std::uint16_t>(value);
}

auto parse_binary_label(const std::string& text) -> std::optional<bool> {
    if (text == "0") {
        return false;
    }
    if (text == "1") {
        return true;
    }
    // Some exporters write labels as floats.
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    if (value == 0.0) {
        return false;
    }
    if (value == 1.0) {
        return true;
    }
    return std::nullopt;
}

auto find_column_opt(const std::vector<std::string>& header, const std::string& name)
    -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

auto find_column(const std::vector<std::string>& header, const std::string& name) -> std::size_t {
    const auto col = find_column_opt(header, name);
    if (!col) {
        throw SchemaError("parse_csv: mapped column '" + name + "' not found in header");
    }
    return *col;
}

} // namespace

auto parse_ipv4(const std::string& text) -> std::optional<std::uint32_t> {
    std::uint32_t ip = 0;
    std::size_t pos = 0;
    for (int octet = 0; octet < 4; ++octet) {
        if (pos >= text.size()) {
            return std::nullopt;
        }
        std::uint32_t value = 0;
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
        if (ec != std::errc{} || ptr == text.data() + pos || value > 255) {
            return std::nullopt;
        }
        ip = (ip << 8) | value;
        pos = static_cast<std::size_t>(ptr - text.data());
        if (octet < 3) {
            if (pos >= text.size() || text[pos] != '.') {
                return std::nullopt;
            }
            ++pos;
        }
    }
    if (pos != text.size()) {
        return std::nullopt;
    }
    return ip;
}

auto format_ipv4(std::uint32_t ip) -> std::string {
    std::ostringstream out;
    out << ((ip >> 24) & 0xff) << '.' << ((ip >> 16) & 0xff) << '.' << ((ip >> 8) & 0xff) << '.'
        << (ip & 0xff);
    return out.str();
}

auto split_csv_line(const std::string& line) -> std::vector<std::string> {
    std::vector<std::string> cells;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(current));
            current.clear();
        } else if (ch != '\r') {
            current.push_back(ch);
        }
    }
    cells.push_back(std::move(current));
    return cells;
}

auto parse_csv(const std::filesystem::path& path,
               const ColumnMap& columns,
               const std::string& benign_class,
               bool require_labels) -> ParseResult {
    std::ifstream in(path);
    if (!in) {
        throw FileError("parse_csv: cannot open " + path.string());
    }
    ParseResult result;
    std::string line;
    std::size_t line_number = 0;

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.front() == '#') {
            ++result.comment_lines;
            continue;
        }
        header = split_csv_line(line);
        break;
    }
    if (header.empty()) {
        throw SchemaError("parse_csv: " + path.string() + " has no header row");
    }

    const std::size_t src_ip_col = find_column(header, columns.src_ip);
    const std::size_t src_port_col = find_column(header, columns.src_port);
    const std::size_t dst_ip_col = find_column(header, columns.dst_ip);
    const std::size_t dst_port_col = find_column(header, columns.dst_port);
    const auto label_col = require_labels
                               ? std::optional<std::size_t>(find_column(header, columns.label))
                               : find_column_opt(header, columns.label);
    const auto class_col =
        require_labels ? std::optional<std::size_t>(find_column(header, columns.attack_class))
                       : find_column_opt(header, columns.attack_class);

    std::vector<std::size_t> feature_cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i != src_ip_col && i != src_port_col && i != dst_ip_col && i != dst_port_col &&
            i != label_col && i != class_col) {
            feature_cols.push_back(i);
            result.feature_columns.push_back(header[i]);
        }
    }

    // flow_index is the data row ordinal, counting malformed rows too, so it
    // always names the original position in the input file.
    std::uint64_t flow_index = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            ++result.comment_lines;
            continue;
        }
        const std::uint64_t row_index = flow_index++;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            result.row_errors.push_back({line_number,
                                         "expected " + std::to_string(header.size()) +
                                             " cells, got " + std::to_string(cells.size())});
            continue;
        }
        RawRecord record;
        const auto src_ip = parse_ipv4(cells[src_ip_col]);
        if (!src_ip) {
            result.row_errors.push_back({line_number, "bad source IP '" + cells[src_ip_col] + "'"});
            continue;
        }
        const auto dst_ip = parse_ipv4(cells[dst_ip_col]);
        if (!dst_ip) {
            result.row_errors.push_back(
                {line_number, "bad destination IP '" + cells[dst_ip_col] + "'"});
            continue;
        }
        const auto src_port = parse_port(cells[src_port_col]);
        if (!src_port) {
            result.row_errors.push_back(
                {line_number, "bad source port '" + cells[src_port_col] + "'"});
            continue;
        }
        const auto dst_port = parse_port(cells[dst_port_col]);
        if (!dst_port) {
            result.row_errors.push_back(
                {line_number, "bad destination port '" + cells[dst_port_col] + "'"});
            continue;
        }
        std::optional<bool> label;
        if (label_col) {
            label = parse_binary_label(cells[*label_col]);
            if (!label) {
                result.row_errors.push_back(
                    {line_number, "bad label '" + cells[*label_col] + "'"});
                continue;
            }
        }
        record.src_ip = *src_ip;
        record.src_port = *src_port;
        record.dst_ip = *dst_ip;
        record.dst_port = *dst_port;
        record.attack_class = class_col ? cells[*class_col] : std::string{};
        record.is_attack = label ? *label
                                 : (!record.attack_class.empty() &&
                                    record.attack_class != benign_class);
        if (record.attack_class.empty()) {
            record.attack_class = record.is_attack ? "Attack" : benign_class;
        }
        if (record.is_attack == (record.attack_class == benign_class)) {
            result.row_errors.push_back({line_number,
                                         "label " + (label_col ? cells[*label_col] : "(derived)") +
                                             " contradicts attack class '" + record.attack_class +
                                             "'"});
            continue;
        }
        record.cells.reserve(feature_cols.size());
        for (std::size_t col : feature_cols) {
            record.cells.push_back(std::move(cells[col]));
        }
        record.flow_index = row_index;
        result.records.push_back(std::move(record));
    }
    return result;
}

} // namespace egsage
