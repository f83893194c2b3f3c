#pragma once

#include <cstdint>
#include <vector>

#include "egsage/graph.hpp"
#include "egsage/matrix.hpp"
#include "egsage/rng.hpp"
#include "egsage/tape.hpp"

namespace egsage {

inline constexpr std::size_t kFullNeighborhood = SIZE_MAX;

// What a node aggregates from its incident edges at layers past the first.
// edge_features keeps aggregating the raw edge features at every layer;
// node information still flows through the self half of the concat.
// node_embeddings switches layers k > 1 to aggregating the opposite
// endpoint's embedding from the previous layer.
enum class NeighborSource : std::uint8_t {
    edge_features,
    node_embeddings,
};

struct ModelConfig {
    std::size_t layers = 2;
    std::size_t hidden = 128;
    double dropout_rate = 0.2;
    std::size_t num_classes = 2;
    // kFullNeighborhood aggregates every incident edge. A smaller value
    // samples that many incident edges uniformly without replacement during
    // training; eval always uses the full neighborhood so it stays
    // deterministic.
    std::size_t neighbor_sample_size = kFullNeighborhood;
    NeighborSource neighbor_source = NeighborSource::edge_features;
};

// Input width of the self half of layer k (1-based).
auto layer_in_self(const ModelConfig& config, std::size_t feature_dim, std::size_t k)
    -> std::size_t;
// Input width of the aggregated-neighborhood half of layer k (1-based).
auto layer_in_neigh(const ModelConfig& config, std::size_t feature_dim, std::size_t k)
    -> std::size_t;

// Layer weights W^k of shape hidden x (in_self + in_neigh) plus the edge
// classification head of shape num_classes x (2 * hidden). No bias terms.
struct ModelParams {
    std::vector<Matrix> layer_weights;
    Matrix head;
};

// Uniform init on +/- sqrt(6 / (fan_in + fan_out)), driven by rng in
// declaration order (layers first, then head).
auto init_params(const ModelConfig& config, std::size_t feature_dim, Rng& rng) -> ModelParams;

// Throws DimensionError when params do not match the config and feature size.
void validate_params(const ModelConfig& config, std::size_t feature_dim, const ModelParams& params);

enum class Mode : std::uint8_t {
    train,
    eval,
};

struct Embeddings {
    // Node embeddings h^1 .. h^K, each num_nodes x hidden.
    std::vector<Matrix> node_layers;
    // z_v = h^K.
    Matrix final_nodes;
    // z_uv = concat(z_src, z_dst), num_edges x (2 * hidden).
    Matrix edge_embeddings;
};

struct ForwardOutput {
    // Row-wise log softmax over classes, num_edges x num_classes.
    Matrix log_probs;
    Embeddings embeddings;
};

// Tape-recorded forward pass for training: returns handles to the log probs,
// edge embeddings and parameter leaves so the caller can attach a loss and
// run backward. Parameter leaves appear in param_vars in ModelParams order
// (layer weights, then head).
struct TapeForward {
    Var log_probs;
    Var edge_embeddings;
    std::vector<Var> node_layers;
    std::vector<Var> param_vars;
};
auto forward_on_tape(Tape& tape,
                     const FlowGraph& graph,
                     const ModelParams& params,
                     const ModelConfig& config,
                     Mode mode,
                     Rng* rng = nullptr) -> TapeForward;

// Full forward pass. Train mode applies dropout between layers and needs an
// rng; eval mode is deterministic and aggregates full neighborhoods.
auto forward(const FlowGraph& graph,
             const ModelParams& params,
             const ModelConfig& config,
             Mode mode = Mode::eval,
             Rng* rng = nullptr) -> ForwardOutput;

// Mean of the given per-edge message rows over node's incident edges; zero
// vector for an empty neighborhood. sample_size below the degree selects a
// uniform sample without replacement (rng required).
auto aggregate_neighborhood(const FlowGraph& graph,
                            std::size_t node,
                            const Matrix& edge_messages,
                            std::size_t sample_size = kFullNeighborhood,
                            Rng* rng = nullptr) -> std::vector<double>;

// One propagation layer outside the tape: relu(W^k concat(h_prev, agg)).
// h_prev is num_nodes x in_self for layer k.
auto layer_forward(const FlowGraph& graph,
                   std::size_t k,
                   const ModelConfig& config,
                   const ModelParams& params,
                   const Matrix& h_prev) -> Matrix;

// z_uv = concat(z[src], z[dst]) per edge.
auto edge_embeddings(const FlowGraph& graph, const Matrix& final_nodes) -> Matrix;

// Log softmax of head logits for precomputed edge embeddings.
auto classify_edges(const Matrix& edge_embedding_rows, const Matrix& head) -> Matrix;

} // namespace egsage
