#include "egsage/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "egsage/errors.hpp"

namespace egsage {

namespace {

auto trim(const std::string& text) -> std::string {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin])) != 0) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1])) != 0) {
        --end;
    }
    return text.substr(begin, end - begin);
}

auto parse_u64(const std::string& key, const std::string& value) -> std::uint64_t {
    std::uint64_t parsed = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw SchemaError("config key '" + key + "': '" + value + "' is not a whole number");
    }
    return parsed;
}

auto parse_f64(const std::string& key, const std::string& value) -> double {
    char* end = nullptr;
    const double parsed = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty()) {
        throw SchemaError("config key '" + key + "': '" + value + "' is not a number");
    }
    return parsed;
}

auto parse_bool(const std::string& key, const std::string& value) -> bool {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw SchemaError("config key '" + key + "': '" + value + "' is not a boolean");
}

auto parse_weights(const std::string& key, const std::string& value) -> std::vector<double> {
    std::vector<double> weights;
    if (trim(value).empty()) {
        return weights;
    }
    std::stringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) {
        weights.push_back(parse_f64(key, trim(item)));
    }
    return weights;
}

auto format_weights(const std::vector<double>& weights) -> std::string {
    std::string out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (i > 0) {
            out += ",";
        }
        out += format_double(weights[i]);
    }
    return out;
}

} // namespace

auto format_double(double value) -> std::string {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) {
        throw NumericError("format_double: value does not fit the buffer");
    }
    return std::string(buffer, ptr);
}

auto RunConfig::model_config(std::size_t num_classes) const -> ModelConfig {
    ModelConfig model;
    model.layers = layers;
    model.hidden = hidden;
    model.dropout_rate = dropout;
    model.num_classes = num_classes;
    model.neighbor_sample_size = neighbor_sample_size;
    model.neighbor_source = neighbor_source;
    return model;
}

auto RunConfig::train_config() const -> TrainConfig {
    TrainConfig train;
    train.learning_rate = learning_rate;
    train.beta1 = beta1;
    train.beta2 = beta2;
    train.epsilon = epsilon;
    train.epochs = epochs;
    train.seed = seed;
    train.class_weights = class_weights;
    return train;
}

auto RunConfig::echo() const -> std::string {
    std::ostringstream out;
    out << "seed = " << seed << '\n';
    out << "train_fraction = " << format_double(train_fraction) << '\n';
    out << "subsample_fraction = " << format_double(subsample_fraction) << '\n';
    out << "stratified = " << (stratified ? "true" : "false") << '\n';
    out << "anonymize = " << (anonymize ? "true" : "false") << '\n';
    out << "benign_class = " << benign_class << '\n';
    out << "categorical_mode = "
        << (categorical_mode == CategoricalMode::one_hot ? "one_hot" : "drop") << '\n';
    out << "max_categories = " << max_categories << '\n';
    out << "src_ip_column = " << columns.src_ip << '\n';
    out << "src_port_column = " << columns.src_port << '\n';
    out << "dst_ip_column = " << columns.dst_ip << '\n';
    out << "dst_port_column = " << columns.dst_port << '\n';
    out << "label_column = " << columns.label << '\n';
    out << "class_column = " << columns.attack_class << '\n';
    out << "layers = " << layers << '\n';
    out << "hidden = " << hidden << '\n';
    out << "dropout = " << format_double(dropout) << '\n';
    out << "neighbor_sample_size = ";
    if (neighbor_sample_size == kFullNeighborhood) {
        out << "full";
    } else {
        out << neighbor_sample_size;
    }
    out << '\n';
    out << "neighbor_source = "
        << (neighbor_source == NeighborSource::edge_features ? "edge_features"
                                                             : "node_embeddings")
        << '\n';
    out << "targets = " << (targets == TargetMode::binary ? "binary" : "multi") << '\n';
    out << "learning_rate = " << format_double(learning_rate) << '\n';
    out << "beta1 = " << format_double(beta1) << '\n';
    out << "beta2 = " << format_double(beta2) << '\n';
    out << "epsilon = " << format_double(epsilon) << '\n';
    out << "epochs = " << epochs << '\n';
    out << "class_weights = " << format_weights(class_weights) << '\n';
    out << "eval_split = " << (eval_split == Assignment::train ? "train" : "test") << '\n';
    out << "joint_graph = " << (joint_graph ? "true" : "false") << '\n';
    return out.str();
}

void apply_config_value(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "seed") {
        config.seed = parse_u64(key, value);
    } else if (key == "train_fraction") {
        config.train_fraction = parse_f64(key, value);
    } else if (key == "subsample_fraction") {
        config.subsample_fraction = parse_f64(key, value);
    } else if (key == "stratified") {
        config.stratified = parse_bool(key, value);
    } else if (key == "anonymize") {
        config.anonymize = parse_bool(key, value);
    } else if (key == "benign_class") {
        config.benign_class = value;
    } else if (key == "categorical_mode") {
        if (value == "one_hot") {
            config.categorical_mode = CategoricalMode::one_hot;
        } else if (value == "drop") {
            config.categorical_mode = CategoricalMode::drop;
        } else {
            throw SchemaError("config key 'categorical_mode': expected one_hot or drop, got '" +
                              value + "'");
        }
    } else if (key == "max_categories") {
        config.max_categories = static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "src_ip_column") {
        config.columns.src_ip = value;
    } else if (key == "src_port_column") {
        config.columns.src_port = value;
    } else if (key == "dst_ip_column") {
        config.columns.dst_ip = value;
    } else if (key == "dst_port_column") {
        config.columns.dst_port = value;
    } else if (key == "label_column") {
        config.columns.label = value;
    } else if (key == "class_column") {
        config.columns.attack_class = value;
    } else if (key == "layers") {
        config.layers = static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "hidden") {
        config.hidden = static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "dropout") {
        config.dropout = parse_f64(key, value);
    } else if (key == "neighbor_sample_size") {
        if (value == "full") {
            config.neighbor_sample_size = kFullNeighborhood;
        } else {
            config.neighbor_sample_size = static_cast<std::size_t>(parse_u64(key, value));
        }
    } else if (key == "neighbor_source") {
        if (value == "edge_features") {
            config.neighbor_source = NeighborSource::edge_features;
        } else if (value == "node_embeddings") {
            config.neighbor_source = NeighborSource::node_embeddings;
        } else {
            throw SchemaError(
                "config key 'neighbor_source': expected edge_features or node_embeddings, got '" +
                value + "'");
        }
    } else if (key == "targets") {
        if (value == "binary") {
            config.targets = TargetMode::binary;
        } else if (value == "multi") {
            config.targets = TargetMode::multiclass;
        } else {
            throw SchemaError("config key 'targets': expected binary or multi, got '" + value +
                              "'");
        }
    } else if (key == "learning_rate") {
        config.learning_rate = parse_f64(key, value);
    } else if (key == "beta1") {
        config.beta1 = parse_f64(key, value);
    } else if (key == "beta2") {
        config.beta2 = parse_f64(key, value);
    } else if (key == "epsilon") {
        config.epsilon = parse_f64(key, value);
    } else if (key == "epochs") {
        config.epochs = static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "class_weights") {
        config.class_weights = parse_weights(key, value);
    } else if (key == "eval_split") {
        if (value == "train") {
            config.eval_split = Assignment::train;
        } else if (value == "test") {
            config.eval_split = Assignment::test;
        } else {
            throw SchemaError("config key 'eval_split': expected train or test, got '" + value +
                              "'");
        }
    } else if (key == "joint_graph") {
        config.joint_graph = parse_bool(key, value);
    } else {
        throw SchemaError("unknown config key '" + key + "'");
    }
}

auto parse_config_file(const std::filesystem::path& path)
    -> std::vector<std::pair<std::string, std::string>> {
    std::ifstream in(path);
    if (!in) {
        throw FileError("cannot open config file " + path.string());
    }
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        const auto text = trim(line);
        if (text.empty()) {
            continue;
        }
        const auto equals = text.find('=');
        if (equals == std::string::npos) {
            throw SchemaError("config file " + path.string() + " line " +
                              std::to_string(line_number) + ": expected key = value");
        }
        const auto key = trim(text.substr(0, equals));
        const auto value = trim(text.substr(equals + 1));
        if (key.empty()) {
            throw SchemaError("config file " + path.string() + " line " +
                              std::to_string(line_number) + ": empty key");
        }
        entries.emplace_back(key, value);
    }
    return entries;
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    for (const auto& [key, value] : parse_config_file(path)) {
        apply_config_value(config, key, value);
    }
}

void apply_env_seed(RunConfig& config) {
    const char* env = std::getenv("EGS_SEED");
    if (env == nullptr || *env == '\0') {
        return;
    }
    config.seed = parse_u64("EGS_SEED", env);
}

} // namespace egsage
