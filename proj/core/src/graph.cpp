#include "egsage/graph.hpp"

#include <map>
#include <unordered_map>

#include "egsage/errors.hpp"

namespace egsage {

namespace {

struct NodeIdHash {
    auto operator()(const NodeId& id) const -> std::size_t {
        return (static_cast<std::size_t>(id.ip) << 16) ^ id.port;
    }
};

struct NodeIdEq {
    auto operator()(const NodeId& a, const NodeId& b) const -> bool { return a == b; }
};

} // namespace

auto build_graph(std::span<const FlowRecord> records, std::vector<std::string> class_names)
    -> FlowGraph {
    FlowGraph graph;
    graph.class_names = std::move(class_names);

    std::unordered_map<std::string, std::uint16_t> class_index;
    for (std::size_t i = 0; i < graph.class_names.size(); ++i) {
        class_index.emplace(graph.class_names[i], static_cast<std::uint16_t>(i));
    }

    graph.feature_dim = records.empty() ? 0 : records.front().features.size();
    for (const FlowRecord& record : records) {
        if (record.features.size() != graph.feature_dim) {
            throw DimensionError("build_graph: flow " + std::to_string(record.flow_index) +
                                 " has " + std::to_string(record.features.size()) +
                                 " features, expected " + std::to_string(graph.feature_dim));
        }
        if (class_index.find(record.attack_class) == class_index.end()) {
            throw SchemaError("build_graph: attack class '" + record.attack_class +
                              "' missing from class table");
        }
    }

    std::unordered_map<NodeId, std::uint32_t, NodeIdHash, NodeIdEq> node_index;
    const auto intern = [&](NodeId id) -> std::uint32_t {
        const auto [it, inserted] =
            node_index.emplace(id, static_cast<std::uint32_t>(graph.nodes.size()));
        if (inserted) {
            graph.nodes.push_back(id);
        }
        return it->second;
    };

    graph.edge_features = Matrix(records.size(), graph.feature_dim);
    graph.edge_src.reserve(records.size());
    graph.edge_dst.reserve(records.size());
    for (std::size_t e = 0; e < records.size(); ++e) {
        const FlowRecord& record = records[e];
        graph.edge_src.push_back(intern({record.src_ip, record.src_port}));
        graph.edge_dst.push_back(intern({record.dst_ip, record.dst_port}));
        for (std::size_t c = 0; c < graph.feature_dim; ++c) {
            graph.edge_features(e, c) = record.features[c];
        }
        graph.edge_is_attack.push_back(record.is_attack ? 1 : 0);
        graph.edge_class.push_back(class_index.at(record.attack_class));
        graph.edge_flow_index.push_back(record.flow_index);
    }
    rebuild_incidence(graph);
    return graph;
}

auto subgraph(const FlowGraph& graph, std::span<const std::uint32_t> edge_ids) -> FlowGraph {
    FlowGraph sub;
    sub.feature_dim = graph.feature_dim;
    sub.class_names = graph.class_names;

    std::unordered_map<std::uint32_t, std::uint32_t> node_map;
    const auto intern = [&](std::uint32_t old_node) -> std::uint32_t {
        const auto [it, inserted] =
            node_map.emplace(old_node, static_cast<std::uint32_t>(sub.nodes.size()));
        if (inserted) {
            sub.nodes.push_back(graph.nodes[old_node]);
        }
        return it->second;
    };

    sub.edge_features = Matrix(edge_ids.size(), graph.feature_dim);
    for (std::size_t i = 0; i < edge_ids.size(); ++i) {
        const std::uint32_t e = edge_ids[i];
        if (e >= graph.num_edges()) {
            throw DimensionError("subgraph: edge id " + std::to_string(e) + " outside graph with " +
                                 std::to_string(graph.num_edges()) + " edges");
        }
        sub.edge_src.push_back(intern(graph.edge_src[e]));
        sub.edge_dst.push_back(intern(graph.edge_dst[e]));
        for (std::size_t c = 0; c < graph.feature_dim; ++c) {
            sub.edge_features(i, c) = graph.edge_features(e, c);
        }
        sub.edge_is_attack.push_back(graph.edge_is_attack[e]);
        sub.edge_class.push_back(graph.edge_class[e]);
        sub.edge_flow_index.push_back(graph.edge_flow_index[e]);
    }
    rebuild_incidence(sub);
    return sub;
}

void rebuild_incidence(FlowGraph& graph) {
    graph.incidence.assign(graph.num_nodes(), {});
    for (std::size_t e = 0; e < graph.num_edges(); ++e) {
        const std::uint32_t u = graph.edge_src[e];
        const std::uint32_t v = graph.edge_dst[e];
        graph.incidence[u].push_back(static_cast<std::uint32_t>(e));
        if (v != u) {
            graph.incidence[v].push_back(static_cast<std::uint32_t>(e));
        }
    }
}

void validate_graph(const FlowGraph& graph) {
    const std::size_t edges = graph.num_edges();
    if (graph.edge_dst.size() != edges || graph.edge_is_attack.size() != edges ||
        graph.edge_class.size() != edges || graph.edge_flow_index.size() != edges ||
        graph.edge_features.rows() != edges) {
        throw DimensionError("validate_graph: edge arrays disagree on edge count");
    }
    if (graph.edge_features.cols() != graph.feature_dim) {
        throw DimensionError("validate_graph: edge feature matrix is " +
                             graph.edge_features.shape_string() + ", expected column count " +
                             std::to_string(graph.feature_dim));
    }
    if (graph.incidence.size() != graph.num_nodes()) {
        throw DimensionError("validate_graph: incidence size does not match node count");
    }
    for (std::size_t e = 0; e < edges; ++e) {
        if (graph.edge_src[e] >= graph.num_nodes() || graph.edge_dst[e] >= graph.num_nodes()) {
            throw StateError("validate_graph: edge " + std::to_string(e) +
                             " references a node outside the graph");
        }
        if (graph.edge_class[e] >= graph.class_names.size()) {
            throw StateError("validate_graph: edge " + std::to_string(e) +
                             " has class index outside the class table");
        }
    }
    // Incidence must list edge e exactly once at each distinct endpoint.
    std::size_t expected_entries = 0;
    for (std::size_t e = 0; e < edges; ++e) {
        expected_entries += graph.edge_src[e] == graph.edge_dst[e] ? 1 : 2;
    }
    std::size_t actual_entries = 0;
    for (std::size_t v = 0; v < graph.num_nodes(); ++v) {
        for (std::uint32_t e : graph.incidence[v]) {
            if (e >= edges) {
                throw StateError("validate_graph: incidence references edge outside the graph");
            }
            if (graph.edge_src[e] != v && graph.edge_dst[e] != v) {
                throw StateError("validate_graph: node " + std::to_string(v) +
                                 " lists edge " + std::to_string(e) + " it does not touch");
            }
            ++actual_entries;
        }
    }
    if (actual_entries != expected_entries) {
        throw StateError("validate_graph: incidence entry count " +
                         std::to_string(actual_entries) + " does not match expected " +
                         std::to_string(expected_entries));
    }
}

} // namespace egsage
