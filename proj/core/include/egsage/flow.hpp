#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace egsage {

// One network flow. src/dst IPs are IPv4 in host byte order. features is the
// encoded (or synthetic) numeric vector; the raw CSV cells live in RawRecord
// until schema encoding. is_attack is consistent with attack_class: attack
// exactly when attack_class differs from the dataset's benign class name.
struct FlowRecord {
    std::uint32_t src_ip = 0;
    std::uint16_t src_port = 0;
    std::uint32_t dst_ip = 0;
    std::uint16_t dst_port = 0;
    std::vector<double> features;
    bool is_attack = false;
    std::string attack_class;
    // Position of the flow in its source file, stable across the pipeline.
    std::uint64_t flow_index = 0;
};

// Dotted-quad IPv4 parsing. Returns nothing for anything that is not four
// decimal octets in range.
auto parse_ipv4(const std::string& text) -> std::optional<std::uint32_t>;
auto format_ipv4(std::uint32_t ip) -> std::string;

} // namespace egsage
