#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "egsage/csv.hpp"
#include "egsage/model.hpp"
#include "egsage/schema.hpp"
#include "egsage/split.hpp"
#include "egsage/train.hpp"

namespace egsage {

// Every pipeline knob with its built-in default. Resolution precedence, low
// to high: these defaults, then the EGS_SEED environment variable (seed
// only), then the config file, then explicit CLI flags. echo() renders the
// fully resolved configuration; it is embedded in every artifact.
struct RunConfig {
    std::uint64_t seed = 0;
    double train_fraction = 0.7;
    double subsample_fraction = 1.0;
    bool stratified = true;
    bool anonymize = true;
    std::string benign_class = "Benign";
    CategoricalMode categorical_mode = CategoricalMode::one_hot;
    std::size_t max_categories = 32;
    ColumnMap columns;

    std::size_t layers = 2;
    std::size_t hidden = 128;
    double dropout = 0.2;
    std::size_t neighbor_sample_size = kFullNeighborhood;
    NeighborSource neighbor_source = NeighborSource::edge_features;

    TargetMode targets = TargetMode::binary;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs = 200;
    std::vector<double> class_weights;

    Assignment eval_split = Assignment::test;
    bool joint_graph = false;

    auto model_config(std::size_t num_classes) const -> ModelConfig;
    auto train_config() const -> TrainConfig;
    auto echo() const -> std::string;
};

// Applies one key=value pair. Throws SchemaError on an unknown key or an
// unparseable value.
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Parses a config file: one `key = value` per line, `#` starts a comment,
// blank lines ignored. Later lines override earlier ones.
auto parse_config_file(const std::filesystem::path& path)
    -> std::vector<std::pair<std::string, std::string>>;

void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// Reads EGS_SEED when set; throws SchemaError when set but unparseable.
void apply_env_seed(RunConfig& config);

// Shortest decimal string that parses back to exactly this double.
auto format_double(double value) -> std::string;

} // namespace egsage
