#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "egsage/dataset.hpp"
#include "egsage/graph.hpp"
#include "egsage/model.hpp"
#include "egsage/train.hpp"

namespace egsage {

// Versioned binary artifacts. Every file is magic (4 bytes), format version,
// tool version string, resolved config echo, payload, then an FNV-1a 64
// checksum trailer over everything before it. Numeric payloads are 64-bit
// little-endian, so artifacts round-trip bit-exactly. Loaders throw
// ArtifactError on bad magic, unsupported version, truncation or checksum
// mismatch, and FileError when the file cannot be read.

inline constexpr std::uint16_t kDatasetFormatVersion = 1;
inline constexpr std::uint16_t kGraphFormatVersion = 1;
inline constexpr std::uint16_t kModelFormatVersion = 1;

void save_dataset(const std::filesystem::path& path, const EncodedDataset& dataset);
auto load_dataset(const std::filesystem::path& path) -> EncodedDataset;

// Trained model plus everything needed to apply it to raw flows: the fitted
// feature schema and the class table travel with the weights.
struct ModelArtifact {
    ModelConfig config;
    TargetMode targets = TargetMode::binary;
    std::size_t feature_dim = 0;
    FeatureSchema schema;
    std::vector<std::string> class_names;
    ModelParams params;
    std::string config_echo;
    std::string tool_version;
};

void save_model(const std::filesystem::path& path, const ModelArtifact& model);
auto load_model(const std::filesystem::path& path) -> ModelArtifact;

void save_graph(const std::filesystem::path& path,
                const FlowGraph& graph,
                const std::string& config_echo);
auto load_graph(const std::filesystem::path& path) -> FlowGraph;

auto fnv1a64(const std::uint8_t* data, std::size_t size) -> std::uint64_t;

} // namespace egsage
