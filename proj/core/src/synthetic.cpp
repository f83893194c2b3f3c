#include "egsage/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <tuple>

#include "egsage/errors.hpp"
#include "egsage/rng.hpp"
#include "egsage/tape.hpp"
#include "egsage/train.hpp"

namespace egsage {

namespace {

void validate_spec(const ScenarioSpec& spec) {
    if (spec.classes.size() < 2) {
        throw SchemaError("generate: at least two classes are required");
    }
    if (spec.feature_dim == 0 || spec.num_endpoints == 0 || spec.num_flows == 0) {
        throw SchemaError("generate: feature_dim, num_endpoints and num_flows must be positive");
    }
    double prior_sum = 0.0;
    for (const ClassSpec& cls : spec.classes) {
        if (cls.prior < 0.0) {
            throw SchemaError("generate: class '" + cls.name + "' has a negative prior");
        }
        prior_sum += cls.prior;
    }
    if (std::abs(prior_sum - 1.0) > 1e-9) {
        throw SchemaError("generate: class priors sum to " + std::to_string(prior_sum) +
                          ", expected 1");
    }
}

auto endpoint_node(std::size_t index) -> std::pair<std::uint32_t, std::uint16_t> {
    // Endpoints live in 10.0.0.0/8; the index alone makes the IP unique.
    const auto ip = static_cast<std::uint32_t>(0x0A000000u + 1u + index);
    const auto port = static_cast<std::uint16_t>(1024 + index % 60000);
    return {ip, port};
}

auto clipped_noise(Rng& rng, double sigma) -> double {
    return std::clamp(rng.normal() * sigma, -6.0 * sigma, 6.0 * sigma);
}

} // namespace

auto generate(const ScenarioSpec& spec) -> std::vector<FlowRecord> {
    validate_spec(spec);
    Rng rng(spec.seed);

    const std::size_t attack_classes = spec.classes.size() - 1;
    const bool topology = spec.scenario != Scenario::feature_separable;

    // Attackers occupy the leading endpoint indices, one disjoint block per
    // attack class; everyone else is an ordinary endpoint.
    std::size_t attackers_per_class = 0;
    std::size_t attacker_total = 0;
    if (topology) {
        attackers_per_class = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::llround(kAttackerEndpointShare * static_cast<double>(spec.num_endpoints))));
        attacker_total = attackers_per_class * attack_classes;
        if (attacker_total >= spec.num_endpoints) {
            throw SchemaError("generate: " + std::to_string(attacker_total) +
                              " attacker endpoints leave no ordinary endpoints out of " +
                              std::to_string(spec.num_endpoints));
        }
    }

    // Per-endpoint latent signatures make a node's identity recoverable from
    // the mean of its incident edge features, independent of any class.
    std::vector<std::vector<double>> signatures;
    if (topology) {
        signatures.resize(spec.num_endpoints);
        for (auto& signature : signatures) {
            signature.resize(spec.feature_dim);
            for (double& x : signature) {
                x = rng.normal() * kSyntheticSignatureSigma;
            }
        }
    }

    // Class means sit on a shared unit direction at spacing `signal`, so the
    // separation between neighboring classes equals the signal strength.
    const bool feature_signal = spec.scenario != Scenario::topology_only;
    const double direction = 1.0 / std::sqrt(static_cast<double>(spec.feature_dim));

    std::vector<double> cumulative;
    double acc = 0.0;
    for (const ClassSpec& cls : spec.classes) {
        acc += cls.prior;
        cumulative.push_back(acc);
    }
    cumulative.back() = 1.0;

    std::vector<FlowRecord> records;
    records.reserve(spec.num_flows);
    for (std::size_t i = 0; i < spec.num_flows; ++i) {
        const double draw = rng.uniform();
        std::size_t cls = 0;
        while (cls + 1 < cumulative.size() && draw >= cumulative[cls]) {
            ++cls;
        }

        std::size_t source = 0;
        if (topology) {
            if (cls > 0) {
                source = (cls - 1) * attackers_per_class + rng.index(attackers_per_class);
            } else {
                source = attacker_total + rng.index(spec.num_endpoints - attacker_total);
            }
        } else {
            source = rng.index(spec.num_endpoints);
        }
        const std::size_t dest = rng.index(spec.num_endpoints);

        FlowRecord record;
        std::tie(record.src_ip, record.src_port) = endpoint_node(source);
        std::tie(record.dst_ip, record.dst_port) = endpoint_node(dest);
        record.features.resize(spec.feature_dim);
        for (std::size_t c = 0; c < spec.feature_dim; ++c) {
            double value = clipped_noise(rng, kSyntheticNoiseSigma);
            if (feature_signal) {
                value += spec.signal * static_cast<double>(cls) * direction;
            }
            if (topology) {
                value += signatures[source][c];
            }
            record.features[c] = value;
        }
        record.is_attack = cls > 0;
        record.attack_class = spec.classes[cls].name;
        record.flow_index = i;
        records.push_back(std::move(record));
    }
    return records;
}

void write_flow_csv(const std::string& path,
                    std::span<const FlowRecord> records,
                    const std::string& provenance) {
    std::ofstream out(path);
    if (!out) {
        throw FileError("write_flow_csv: cannot open " + path);
    }
    if (!provenance.empty()) {
        std::istringstream lines(provenance);
        std::string line;
        while (std::getline(lines, line)) {
            out << "# " << line << "\n";
        }
    }
    const std::size_t dim = records.empty() ? 0 : records.front().features.size();
    out << "IPV4_SRC_ADDR,L4_SRC_PORT,IPV4_DST_ADDR,L4_DST_PORT";
    for (std::size_t c = 0; c < dim; ++c) {
        out << ",f" << c;
    }
    out << ",Label,Attack\n";
    char buffer[64];
    for (const FlowRecord& record : records) {
        out << format_ipv4(record.src_ip) << ',' << record.src_port << ','
            << format_ipv4(record.dst_ip) << ',' << record.dst_port;
        if (record.features.size() != dim) {
            throw DimensionError("write_flow_csv: inconsistent feature dimensions");
        }
        for (double value : record.features) {
            // %.17g survives a text round trip bit-exactly.
            std::snprintf(buffer, sizeof buffer, "%.17g", value);
            out << ',' << buffer;
        }
        out << ',' << (record.is_attack ? 1 : 0) << ',' << record.attack_class << "\n";
    }
    if (!out) {
        throw FileError("write_flow_csv: write failed for " + path);
    }
}

auto train_baseline(const Matrix& features,
                    std::span<const std::uint16_t> labels,
                    std::size_t num_classes,
                    const BaselineTrainConfig& config) -> BaselineModel {
    if (features.rows() == 0) {
        throw StateError("train_baseline: no rows");
    }
    if (labels.size() != features.rows()) {
        throw DimensionError("train_baseline: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(features.rows()) + " rows");
    }
    Matrix augmented = concat_cols(features, Matrix::filled(features.rows(), 1, 1.0));
    auto label_vec = std::make_shared<std::vector<std::uint16_t>>(labels.begin(), labels.end());

    BaselineModel model;
    model.weights = Matrix(num_classes, augmented.cols());

    TrainConfig adam_config;
    adam_config.learning_rate = config.learning_rate;

    AdamState adam;
    adam.m.emplace_back(model.weights.rows(), model.weights.cols());
    adam.v.emplace_back(model.weights.rows(), model.weights.cols());

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        Tape tape;
        const Var x = tape.leaf(augmented, false);
        const Var w = tape.leaf(model.weights, true);
        const Var loss = tape.nll_loss(tape.log_softmax(tape.matmul(x, w, false, true)), label_vec);
        tape.backward(loss);
        const Matrix& gradient = tape.grad(w);

        double max_abs = 0.0;
        for (std::size_t i = 0; i < gradient.size(); ++i) {
            max_abs = std::max(max_abs, std::abs(gradient.data()[i]));
        }
        if (max_abs < config.gradient_tolerance) {
            break;
        }

        adam.step += 1;
        const double bias1 = 1.0 - std::pow(adam_config.beta1, static_cast<double>(adam.step));
        const double bias2 = 1.0 - std::pow(adam_config.beta2, static_cast<double>(adam.step));
        Matrix& m = adam.m.front();
        Matrix& v = adam.v.front();
        for (std::size_t i = 0; i < model.weights.size(); ++i) {
            const double g = gradient.data()[i];
            m.data()[i] = adam_config.beta1 * m.data()[i] + (1.0 - adam_config.beta1) * g;
            v.data()[i] = adam_config.beta2 * v.data()[i] + (1.0 - adam_config.beta2) * g * g;
            model.weights.data()[i] -= adam_config.learning_rate * (m.data()[i] / bias1) /
                                       (std::sqrt(v.data()[i] / bias2) + adam_config.epsilon);
        }
    }
    return model;
}

auto baseline_log_probs(const BaselineModel& model, const Matrix& features) -> Matrix {
    Matrix augmented = concat_cols(features, Matrix::filled(features.rows(), 1, 1.0));
    return log_softmax_rows(matmul(augmented, model.weights, false, true));
}

auto baseline_predict(const BaselineModel& model, const Matrix& features)
    -> std::vector<std::uint16_t> {
    const Matrix log_probs = baseline_log_probs(model, features);
    std::vector<std::uint16_t> predictions(log_probs.rows(), 0);
    for (std::size_t r = 0; r < log_probs.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < log_probs.cols(); ++c) {
            if (log_probs(r, c) > log_probs(r, best)) {
                best = c;
            }
        }
        predictions[r] = static_cast<std::uint16_t>(best);
    }
    return predictions;
}

} // namespace egsage
