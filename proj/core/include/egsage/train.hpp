#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "egsage/graph.hpp"
#include "egsage/model.hpp"

namespace egsage {

// How edge targets derive from flow records: binary collapses every attack
// class to label 1 (benign 0); multiclass uses the class table index.
enum class TargetMode : std::uint8_t {
    binary,
    multiclass,
};

struct TrainConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
    // Optional per-class loss weights; empty means uniform.
    std::vector<double> class_weights;
};

// First and second moment estimates per parameter, plus the step counter
// driving bias correction.
struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::uint64_t step = 0;
};

auto make_adam_state(const ModelParams& params) -> AdamState;

// Weighted mean negative log likelihood; identical math to the tape op,
// usable on plain matrices.
auto nll_loss(const Matrix& log_probs,
              std::span<const std::uint16_t> labels,
              const std::vector<double>* class_weights = nullptr) -> double;

// One Adam update over (layer weights..., head) with bias-corrected moments.
// Throws NumericError naming the parameter when a gradient is non-finite.
void adam_step(ModelParams& params,
               const std::vector<Matrix>& gradients,
               AdamState& state,
               const TrainConfig& config);

struct EpochStats {
    std::size_t epoch = 0;
    double loss = 0.0;
    double train_accuracy = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> log;
};

// Full-graph training: every epoch records one forward pass over the whole
// graph in train mode, backpropagates the weighted NLL and applies Adam.
// targets holds one label per edge, below config.num_classes. epochs = 0
// returns the initialized parameters untouched. All randomness (init,
// dropout, sampling) derives from train_config.seed.
auto train(const FlowGraph& graph,
           std::span<const std::uint16_t> targets,
           const ModelConfig& model_config,
           const TrainConfig& train_config) -> TrainResult;

// Continues training from existing parameters; used by train() after init.
auto train_from(const FlowGraph& graph,
                std::span<const std::uint16_t> targets,
                const ModelConfig& model_config,
                const TrainConfig& train_config,
                ModelParams params,
                Rng& rng) -> TrainResult;

} // namespace egsage
