#include "egsage/train.hpp"

#include <cmath>
#include <memory>

#include "egsage/errors.hpp"

namespace egsage {

namespace {

auto param_name(std::size_t index, std::size_t layer_count) -> std::string {
    return index < layer_count ? "layer" + std::to_string(index + 1) : "head";
}

auto argmax_row(const Matrix& m, std::size_t row) -> std::size_t {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols(); ++c) {
        if (m(row, c) > m(row, best)) {
            best = c;
        }
    }
    return best;
}

} // namespace

auto make_adam_state(const ModelParams& params) -> AdamState {
    AdamState state;
    for (const Matrix& w : params.layer_weights) {
        state.m.emplace_back(w.rows(), w.cols());
        state.v.emplace_back(w.rows(), w.cols());
    }
    state.m.emplace_back(params.head.rows(), params.head.cols());
    state.v.emplace_back(params.head.rows(), params.head.cols());
    return state;
}

auto nll_loss(const Matrix& log_probs,
              std::span<const std::uint16_t> labels,
              const std::vector<double>* class_weights) -> double {
    Tape tape;
    const Var lp = tape.leaf(log_probs, false);
    auto label_vec = std::make_shared<std::vector<std::uint16_t>>(labels.begin(), labels.end());
    return tape.value(tape.nll_loss(lp, std::move(label_vec), class_weights))(0, 0);
}

void adam_step(ModelParams& params,
               const std::vector<Matrix>& gradients,
               AdamState& state,
               const TrainConfig& config) {
    std::vector<Matrix*> slots;
    for (Matrix& w : params.layer_weights) {
        slots.push_back(&w);
    }
    slots.push_back(&params.head);
    if (gradients.size() != slots.size() || state.m.size() != slots.size()) {
        throw DimensionError("adam_step: " + std::to_string(gradients.size()) +
                             " gradients for " + std::to_string(slots.size()) + " parameters");
    }

    state.step += 1;
    const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    for (std::size_t p = 0; p < slots.size(); ++p) {
        Matrix& param = *slots[p];
        const Matrix& grad = gradients[p];
        if (!param.same_shape(grad)) {
            throw DimensionError("adam_step: gradient " + grad.shape_string() +
                                 " does not match parameter " + param.shape_string());
        }
        if (!grad.all_finite()) {
            throw NumericError("adam_step: non-finite gradient for " +
                               param_name(p, params.layer_weights.size()));
        }
        Matrix& m = state.m[p];
        Matrix& v = state.v[p];
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double g = grad.data()[i];
            m.data()[i] = config.beta1 * m.data()[i] + (1.0 - config.beta1) * g;
            v.data()[i] = config.beta2 * v.data()[i] + (1.0 - config.beta2) * g * g;
            const double m_hat = m.data()[i] / bias1;
            const double v_hat = v.data()[i] / bias2;
            param.data()[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

auto train(const FlowGraph& graph,
           std::span<const std::uint16_t> targets,
           const ModelConfig& model_config,
           const TrainConfig& train_config) -> TrainResult {
    if (graph.num_edges() == 0) {
        throw StateError("train: graph has no edges");
    }
    Rng rng(train_config.seed);
    ModelParams params = init_params(model_config, graph.feature_dim, rng);
    return train_from(graph, targets, model_config, train_config, std::move(params), rng);
}

auto train_from(const FlowGraph& graph,
                std::span<const std::uint16_t> targets,
                const ModelConfig& model_config,
                const TrainConfig& train_config,
                ModelParams params,
                Rng& rng) -> TrainResult {
    if (graph.num_edges() == 0) {
        throw StateError("train: graph has no edges");
    }
    if (targets.size() != graph.num_edges()) {
        throw DimensionError("train: " + std::to_string(targets.size()) + " targets for " +
                             std::to_string(graph.num_edges()) + " edges");
    }
    const std::vector<double>* weights =
        train_config.class_weights.empty() ? nullptr : &train_config.class_weights;

    auto labels = std::make_shared<std::vector<std::uint16_t>>(targets.begin(), targets.end());

    TrainResult result;
    result.params = std::move(params);
    AdamState adam = make_adam_state(result.params);

    for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        Tape tape;
        TapeForward fwd =
            forward_on_tape(tape, graph, result.params, model_config, Mode::train, &rng);
        const Var loss = tape.nll_loss(fwd.log_probs, labels, weights);

        const double loss_value = tape.value(loss)(0, 0);
        if (!std::isfinite(loss_value)) {
            throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
        }

        tape.backward(loss);
        std::vector<Matrix> gradients;
        gradients.reserve(fwd.param_vars.size());
        for (Var p : fwd.param_vars) {
            gradients.push_back(tape.grad(p));
        }

        const Matrix& log_probs = tape.value(fwd.log_probs);
        std::size_t correct = 0;
        for (std::size_t e = 0; e < graph.num_edges(); ++e) {
            if (argmax_row(log_probs, e) == targets[e]) {
                ++correct;
            }
        }

        adam_step(result.params, gradients, adam, train_config);
        result.log.push_back({epoch,
                              loss_value,
                              static_cast<double>(correct) /
                                  static_cast<double>(graph.num_edges())});
    }
    return result;
}

} // namespace egsage
