#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egsage/flow.hpp"
#include "egsage/matrix.hpp"

namespace egsage {

// Graph endpoint: an (IP, L4 port) pair.
struct NodeId {
    std::uint32_t ip = 0;
    std::uint16_t port = 0;

    auto operator<=>(const NodeId&) const = default;
};

// Undirected multigraph of flow endpoints. Each flow becomes one edge from
// its source endpoint to its destination endpoint; parallel edges and self
// loops are preserved. Edge row e of edge_features carries the flow's
// feature vector. incidence[v] lists the edges touching node v, a self loop
// appearing once, so degree(v) is the edge count used by mean aggregation.
struct FlowGraph {
    std::size_t feature_dim = 0;
    std::vector<NodeId> nodes;
    std::vector<std::uint32_t> edge_src;
    std::vector<std::uint32_t> edge_dst;
    Matrix edge_features;
    std::vector<std::uint8_t> edge_is_attack;
    std::vector<std::uint16_t> edge_class;
    std::vector<std::uint64_t> edge_flow_index;
    std::vector<std::vector<std::uint32_t>> incidence;
    std::vector<std::string> class_names;

    auto num_nodes() const -> std::size_t { return nodes.size(); }
    auto num_edges() const -> std::size_t { return edge_src.size(); }
    auto degree(std::size_t v) const -> std::size_t { return incidence[v].size(); }
};

// Builds the endpoint graph from encoded flows. Nodes are created in first
// appearance order (source endpoint before destination per flow); edges keep
// the record order and their flow_index. Every record's attack_class must
// appear in class_names. Records may be empty; feature dimensions must agree.
auto build_graph(std::span<const FlowRecord> records, std::vector<std::string> class_names)
    -> FlowGraph;

// Restriction of the graph to the given edges (ids into graph, kept in the
// given order). Nodes are restricted to the endpoints of the kept edges and
// the incidence structure is rebuilt; flow_index values are preserved.
auto subgraph(const FlowGraph& graph, std::span<const std::uint32_t> edge_ids) -> FlowGraph;

// Recomputes incidence from edge endpoints. Used after hand-assembling a
// graph in tests or deserialization.
void rebuild_incidence(FlowGraph& graph);

// Checks structural invariants (endpoint ranges, parallel arrays, incidence
// consistency). Throws DimensionError or StateError on violation.
void validate_graph(const FlowGraph& graph);

} // namespace egsage
