#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "egsage/anonymize.hpp"
#include "egsage/config.hpp"
#include "egsage/dataset.hpp"
#include "egsage/metrics.hpp"
#include "egsage/serialize.hpp"
#include "egsage/train.hpp"

namespace egsage {

// End-to-end stages shared by the command-line tool and the acceptance
// suite. Every function is deterministic for a fixed RunConfig; no output
// contains wall-clock state.

struct EncodeResult {
    EncodedDataset dataset;
    AnonymizationMap anonymization;
    std::string report;
};

// CSV to encoded dataset: parse, subsample and split, anonymize sources,
// fit the feature schema on the training split only, encode every retained
// record. Throws SchemaError when no usable rows remain.
auto encode_dataset(const std::filesystem::path& csv_path, const RunConfig& config)
    -> EncodeResult;

struct TrainModelResult {
    ModelArtifact model;
    std::vector<EpochStats> log;
};

// Trains on the dataset's training split. Binary targets collapse attacks
// to one class; multiclass uses the dataset's class table.
auto train_model(const EncodedDataset& dataset, const RunConfig& config) -> TrainModelResult;

auto loss_log_csv(const std::vector<EpochStats>& log) -> std::string;

// Graph for one split. Separate mode (default) builds the graph from that
// split's records alone; joint mode builds it from all retained records and
// restricts evaluation to the split's edges via rows.
struct SplitGraph {
    FlowGraph graph;
    // Edge rows to evaluate, in flow order.
    std::vector<std::size_t> rows;
};
auto dataset_graph(const EncodedDataset& dataset, Assignment split, bool joint) -> SplitGraph;

// Edge labels in the model's class space. Binary reads the attack flag;
// multiclass maps the graph's class table into model_classes by name and
// throws ArtifactError on a class the model does not know.
auto edge_targets(const FlowGraph& graph,
                  TargetMode mode,
                  const std::vector<std::string>& model_classes) -> std::vector<std::uint16_t>;

struct EvalResult {
    MetricsReport metrics;
    ConfusionMatrix confusion{0};
    std::string text;
    std::string csv;
};

// Evaluates the model on the chosen split. Throws DimensionError naming
// both dimensions when the dataset's feature width does not match the
// model's.
auto evaluate_model(const EncodedDataset& dataset,
                    const ModelArtifact& model,
                    const RunConfig& config) -> EvalResult;

struct PredictResult {
    std::string csv;
    std::size_t rows = 0;
    std::vector<RowError> row_errors;
};

// Classifies a raw flow CSV with the model's embedded schema. Label columns
// are optional; keys are kept verbatim (no anonymization).
auto predict_flows(const std::filesystem::path& csv_path,
                   const ModelArtifact& model,
                   const RunConfig& config) -> PredictResult;

// Edge embeddings of the chosen split as CSV keyed by flow_index.
auto export_embeddings_csv(const EncodedDataset& dataset,
                           const ModelArtifact& model,
                           const RunConfig& config) -> std::string;

} // namespace egsage
