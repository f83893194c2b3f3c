#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egsage/flow.hpp"
#include "egsage/matrix.hpp"

namespace egsage {

enum class Scenario : std::uint8_t {
    // Class separates in feature space: class c's features are Gaussian
    // around a mean placed c * signal along a fixed unit direction, so the
    // distance between neighboring class means equals the signal strength.
    feature_separable,
    // Features are class-blind. Every endpoint carries a persistent latent
    // signature; a flow's features are its source's signature plus noise,
    // and the label depends only on whether the source is one of a small
    // set of high-degree attacker endpoints. Per-flow features alone say
    // nothing about the class, but aggregating a node's incident edges
    // recovers its signature and degree, which is what graph message
    // passing can exploit.
    topology_only,
    // Both effects at once.
    mixed,
};

struct ClassSpec {
    std::string name;
    double prior = 0.0;
};

struct ScenarioSpec {
    Scenario scenario = Scenario::feature_separable;
    std::size_t num_endpoints = 1000;
    std::size_t num_flows = 10000;
    std::size_t feature_dim = 4;
    // First entry is the benign class. Priors must sum to 1.
    std::vector<ClassSpec> classes = {{"Benign", 0.8}, {"Attack", 0.2}};
    double signal = 1.0;
    std::uint64_t seed = 0;
};

// Gaussian noise scale shared by all scenarios; signature vectors are unit
// scale. Noise draws are clipped to +/- 6 sigma to keep z-scoring stable.
inline constexpr double kSyntheticNoiseSigma = 0.4;
inline constexpr double kSyntheticSignatureSigma = 1.0;
// Attacker endpoints per attack class: 1 percent of endpoints, at least one.
inline constexpr double kAttackerEndpointShare = 0.01;

// Generates flows with raw (unencoded) numeric features. Deterministic: the
// same spec always yields byte-identical records. Labels are drawn from the
// class priors; in topology scenarios attack flows originate from the
// attacker endpoints of their class, everything else from ordinary
// endpoints, destinations uniform over all endpoints.
auto generate(const ScenarioSpec& spec) -> std::vector<FlowRecord>;

// Writes records as a flow CSV (keys, f0..f{d-1}, Label, Attack) that
// parse_csv reads back unchanged.
void write_flow_csv(const std::string& path,
                    std::span<const FlowRecord> records,
                    const std::string& provenance = {});

// Multinomial logistic regression over edge features only, trained with the
// same tape and Adam machinery as the graph model. Features are augmented
// with a constant 1 column so the model can express class priors.
struct BaselineModel {
    // num_classes x (feature_dim + 1), bias column last.
    Matrix weights;
};

struct BaselineTrainConfig {
    double learning_rate = 0.05;
    std::size_t max_epochs = 1000;
    double gradient_tolerance = 1e-6;
};

// Trains to convergence: stops when the gradient max-norm drops below
// gradient_tolerance or after max_epochs.
auto train_baseline(const Matrix& features,
                    std::span<const std::uint16_t> labels,
                    std::size_t num_classes,
                    const BaselineTrainConfig& config = {}) -> BaselineModel;

auto baseline_log_probs(const BaselineModel& model, const Matrix& features) -> Matrix;
auto baseline_predict(const BaselineModel& model, const Matrix& features)
    -> std::vector<std::uint16_t>;

} // namespace egsage
