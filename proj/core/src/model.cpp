#include "egsage/model.hpp"

#include <cmath>
#include <memory>

#include "egsage/errors.hpp"

namespace egsage {

namespace {

void require_positive(std::size_t value, const char* what) {
    if (value == 0) {
        throw DimensionError(std::string("model: ") + what + " must be positive");
    }
}

// Incident edge groups per node, optionally subsampled. These drive the
// mean_rows op when aggregating edge features.
auto incident_edge_groups(const FlowGraph& graph, std::size_t sample_size, Rng* rng)
    -> std::shared_ptr<RowGroups> {
    auto groups = std::make_shared<RowGroups>(graph.num_nodes());
    for (std::size_t v = 0; v < graph.num_nodes(); ++v) {
        const auto& incident = graph.incidence[v];
        if (incident.size() <= sample_size) {
            (*groups)[v] = incident;
            continue;
        }
        if (rng == nullptr) {
            throw StateError("forward: neighbor sampling requires an rng");
        }
        auto picks = rng->sample_without_replacement(incident.size(), sample_size);
        (*groups)[v].reserve(sample_size);
        for (std::size_t pick : picks) {
            (*groups)[v].push_back(incident[pick]);
        }
    }
    return groups;
}

// Opposite-endpoint groups per node for the node_embeddings neighbor source:
// entry lists, for each (sampled) incident edge, the node at its other end.
auto opposite_node_groups(const FlowGraph& graph, const RowGroups& edge_groups)
    -> std::shared_ptr<RowGroups> {
    auto groups = std::make_shared<RowGroups>(graph.num_nodes());
    for (std::size_t v = 0; v < graph.num_nodes(); ++v) {
        (*groups)[v].reserve(edge_groups[v].size());
        for (std::uint32_t e : edge_groups[v]) {
            const std::uint32_t u = graph.edge_src[e] == v ? graph.edge_dst[e] : graph.edge_src[e];
            (*groups)[v].push_back(u);
        }
    }
    return groups;
}

} // namespace

auto layer_in_self(const ModelConfig& config, std::size_t feature_dim, std::size_t k)
    -> std::size_t {
    return k == 1 ? feature_dim : config.hidden;
}

auto layer_in_neigh(const ModelConfig& config, std::size_t feature_dim, std::size_t k)
    -> std::size_t {
    if (config.neighbor_source == NeighborSource::node_embeddings && k > 1) {
        return config.hidden;
    }
    return feature_dim;
}

auto init_params(const ModelConfig& config, std::size_t feature_dim, Rng& rng) -> ModelParams {
    require_positive(config.layers, "layer count");
    require_positive(config.hidden, "hidden width");
    require_positive(config.num_classes, "class count");
    require_positive(feature_dim, "feature dimension");

    const auto glorot_fill = [&rng](Matrix& m) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        for (std::size_t i = 0; i < m.size(); ++i) {
            m.data()[i] = rng.uniform(-bound, bound);
        }
    };

    ModelParams params;
    for (std::size_t k = 1; k <= config.layers; ++k) {
        Matrix w(config.hidden,
                 layer_in_self(config, feature_dim, k) + layer_in_neigh(config, feature_dim, k));
        glorot_fill(w);
        params.layer_weights.push_back(std::move(w));
    }
    params.head = Matrix(config.num_classes, 2 * config.hidden);
    glorot_fill(params.head);
    return params;
}

void validate_params(const ModelConfig& config,
                     std::size_t feature_dim,
                     const ModelParams& params) {
    if (params.layer_weights.size() != config.layers) {
        throw DimensionError("model: " + std::to_string(params.layer_weights.size()) +
                             " layer weights for " + std::to_string(config.layers) + " layers");
    }
    for (std::size_t k = 1; k <= config.layers; ++k) {
        const Matrix& w = params.layer_weights[k - 1];
        const std::size_t want_cols =
            layer_in_self(config, feature_dim, k) + layer_in_neigh(config, feature_dim, k);
        if (w.rows() != config.hidden || w.cols() != want_cols) {
            throw DimensionError("model: layer " + std::to_string(k) + " weights are " +
                                 w.shape_string() + ", expected " +
                                 std::to_string(config.hidden) + "x" + std::to_string(want_cols));
        }
    }
    if (params.head.rows() != config.num_classes || params.head.cols() != 2 * config.hidden) {
        throw DimensionError("model: head is " + params.head.shape_string() + ", expected " +
                             std::to_string(config.num_classes) + "x" +
                             std::to_string(2 * config.hidden));
    }
}

auto forward_on_tape(Tape& tape,
                     const FlowGraph& graph,
                     const ModelParams& params,
                     const ModelConfig& config,
                     Mode mode,
                     Rng* rng) -> TapeForward {
    validate_params(config, graph.feature_dim, params);
    if (mode == Mode::train && config.dropout_rate > 0.0 && rng == nullptr) {
        throw StateError("forward: train mode with dropout requires an rng");
    }

    TapeForward out;
    for (const Matrix& w : params.layer_weights) {
        out.param_vars.push_back(tape.leaf(w, true));
    }
    const Var head = tape.leaf(params.head, true);
    out.param_vars.push_back(head);

    const Var edge_features = tape.leaf(graph.edge_features, false);

    // Node features are all ones in the edge feature dimension.
    Var h = tape.leaf(Matrix::filled(graph.num_nodes(), graph.feature_dim, 1.0), false);

    // Sampling happens in train mode only; eval aggregates everything.
    const std::size_t sample_size =
        mode == Mode::train ? config.neighbor_sample_size : kFullNeighborhood;
    const auto edge_groups = incident_edge_groups(graph, sample_size, rng);
    std::shared_ptr<RowGroups> node_groups;
    if (config.neighbor_source == NeighborSource::node_embeddings && config.layers > 1) {
        node_groups = opposite_node_groups(graph, *edge_groups);
    }

    for (std::size_t k = 1; k <= config.layers; ++k) {
        Var aggregated;
        if (config.neighbor_source == NeighborSource::node_embeddings && k > 1) {
            aggregated = tape.mean_rows(h, node_groups);
        } else {
            aggregated = tape.mean_rows(edge_features, edge_groups);
        }
        const Var concat = tape.concat_cols(h, aggregated);
        h = tape.relu(tape.matmul(concat, out.param_vars[k - 1], false, true));
        out.node_layers.push_back(h);
        // Dropout sits between layers only; the final embeddings stay clean.
        if (mode == Mode::train && k < config.layers && config.dropout_rate > 0.0) {
            h = tape.dropout(h, config.dropout_rate, *rng);
        }
    }

    auto src_rows = std::make_shared<std::vector<std::uint32_t>>(graph.edge_src);
    auto dst_rows = std::make_shared<std::vector<std::uint32_t>>(graph.edge_dst);
    out.edge_embeddings = tape.concat_cols(tape.gather_rows(h, std::move(src_rows)),
                                           tape.gather_rows(h, std::move(dst_rows)));
    out.log_probs = tape.log_softmax(tape.matmul(out.edge_embeddings, head, false, true));
    return out;
}

auto forward(const FlowGraph& graph,
             const ModelParams& params,
             const ModelConfig& config,
             Mode mode,
             Rng* rng) -> ForwardOutput {
    Tape tape;
    TapeForward recorded = forward_on_tape(tape, graph, params, config, mode, rng);
    ForwardOutput out;
    out.log_probs = tape.value(recorded.log_probs);
    out.embeddings.edge_embeddings = tape.value(recorded.edge_embeddings);
    for (Var layer : recorded.node_layers) {
        out.embeddings.node_layers.push_back(tape.value(layer));
    }
    out.embeddings.final_nodes = out.embeddings.node_layers.back();
    return out;
}

auto aggregate_neighborhood(const FlowGraph& graph,
                            std::size_t node,
                            const Matrix& edge_messages,
                            std::size_t sample_size,
                            Rng* rng) -> std::vector<double> {
    if (node >= graph.num_nodes()) {
        throw DimensionError("aggregate_neighborhood: node " + std::to_string(node) +
                             " outside graph with " + std::to_string(graph.num_nodes()) +
                             " nodes");
    }
    if (edge_messages.rows() != graph.num_edges()) {
        throw DimensionError("aggregate_neighborhood: message rows " +
                             edge_messages.shape_string() + " do not match edge count " +
                             std::to_string(graph.num_edges()));
    }
    std::vector<double> mean(edge_messages.cols(), 0.0);
    const auto& incident = graph.incidence[node];
    std::vector<std::uint32_t> sampled;
    std::span<const std::uint32_t> edges(incident);
    if (incident.size() > sample_size) {
        if (rng == nullptr) {
            throw StateError("aggregate_neighborhood: sampling requires an rng");
        }
        for (std::size_t pick : rng->sample_without_replacement(incident.size(), sample_size)) {
            sampled.push_back(incident[pick]);
        }
        edges = sampled;
    }
    if (edges.empty()) {
        return mean;
    }
    for (std::uint32_t e : edges) {
        for (std::size_t c = 0; c < mean.size(); ++c) {
            mean[c] += edge_messages(e, c);
        }
    }
    const double inv = 1.0 / static_cast<double>(edges.size());
    for (double& x : mean) {
        x *= inv;
    }
    return mean;
}

auto layer_forward(const FlowGraph& graph,
                   std::size_t k,
                   const ModelConfig& config,
                   const ModelParams& params,
                   const Matrix& h_prev) -> Matrix {
    if (k == 0 || k > config.layers) {
        throw DimensionError("layer_forward: layer " + std::to_string(k) + " outside 1.." +
                             std::to_string(config.layers));
    }
    const std::size_t in_self = layer_in_self(config, graph.feature_dim, k);
    if (h_prev.rows() != graph.num_nodes() || h_prev.cols() != in_self) {
        throw DimensionError("layer_forward: h_prev is " + h_prev.shape_string() + ", expected " +
                             std::to_string(graph.num_nodes()) + "x" + std::to_string(in_self));
    }
    const bool aggregate_nodes =
        config.neighbor_source == NeighborSource::node_embeddings && k > 1;
    Matrix aggregated(graph.num_nodes(), layer_in_neigh(config, graph.feature_dim, k));
    for (std::size_t v = 0; v < graph.num_nodes(); ++v) {
        if (aggregate_nodes) {
            const auto& incident = graph.incidence[v];
            if (incident.empty()) {
                continue;
            }
            for (std::uint32_t e : incident) {
                const std::uint32_t u =
                    graph.edge_src[e] == v ? graph.edge_dst[e] : graph.edge_src[e];
                for (std::size_t c = 0; c < aggregated.cols(); ++c) {
                    aggregated(v, c) += h_prev(u, c);
                }
            }
            const double inv = 1.0 / static_cast<double>(incident.size());
            for (std::size_t c = 0; c < aggregated.cols(); ++c) {
                aggregated(v, c) *= inv;
            }
        } else {
            const auto mean = aggregate_neighborhood(graph, v, graph.edge_features);
            for (std::size_t c = 0; c < aggregated.cols(); ++c) {
                aggregated(v, c) = mean[c];
            }
        }
    }
    return relu(matmul(concat_cols(h_prev, aggregated), params.layer_weights[k - 1], false, true));
}

auto edge_embeddings(const FlowGraph& graph, const Matrix& final_nodes) -> Matrix {
    if (final_nodes.rows() != graph.num_nodes()) {
        throw DimensionError("edge_embeddings: node matrix " + final_nodes.shape_string() +
                             " does not match node count " + std::to_string(graph.num_nodes()));
    }
    Matrix out(graph.num_edges(), 2 * final_nodes.cols());
    for (std::size_t e = 0; e < graph.num_edges(); ++e) {
        const std::uint32_t u = graph.edge_src[e];
        const std::uint32_t v = graph.edge_dst[e];
        for (std::size_t c = 0; c < final_nodes.cols(); ++c) {
            out(e, c) = final_nodes(u, c);
            out(e, final_nodes.cols() + c) = final_nodes(v, c);
        }
    }
    return out;
}

auto classify_edges(const Matrix& edge_embedding_rows, const Matrix& head) -> Matrix {
    return log_softmax_rows(matmul(edge_embedding_rows, head, false, true));
}

} // namespace egsage
