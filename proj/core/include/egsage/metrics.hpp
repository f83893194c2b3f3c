#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egsage/graph.hpp"
#include "egsage/model.hpp"

namespace egsage {

// Rows are true classes, columns are predicted classes.
struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::int64_t> counts;

    explicit ConfusionMatrix(std::size_t classes)
        : num_classes(classes), counts(classes * classes, 0) {}

    auto at(std::size_t truth, std::size_t predicted) -> std::int64_t& {
        return counts[truth * num_classes + predicted];
    }
    auto at(std::size_t truth, std::size_t predicted) const -> std::int64_t {
        return counts[truth * num_classes + predicted];
    }
    auto total() const -> std::int64_t;
    auto row_sum(std::size_t truth) const -> std::int64_t;
    auto col_sum(std::size_t predicted) const -> std::int64_t;
};

auto confusion(std::span<const std::uint16_t> labels,
               std::span<const std::uint16_t> predictions,
               std::size_t num_classes) -> ConfusionMatrix;

// One-vs-rest metrics for a single class. Any 0/0 rate evaluates to 0 and
// raises the degenerate flag.
struct ClassMetrics {
    std::string name;
    // Detection rate, i.e. recall: TP / (TP + FN).
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
    bool degenerate = false;
};

struct MetricsReport {
    bool binary = false;
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    // Support-weighted averages over classes with nonzero support.
    double weighted_recall = 0.0;
    double weighted_precision = 0.0;
    double weighted_f1 = 0.0;
    // False alarm rate FP / (FP + TN), binary only (attack positive).
    std::optional<double> far;
    bool far_degenerate = false;

    // Headline row: the attack class for binary reports, weighted averages
    // otherwise.
    auto headline() const -> ClassMetrics;
};

// Binary metrics with class 1 (attack) as the positive class. The per-class
// rows are exactly what multiclass_metrics computes for two classes, plus
// accuracy and FAR.
auto binary_metrics(const ConfusionMatrix& matrix,
                    const std::vector<std::string>& class_names = {"Benign", "Attack"})
    -> MetricsReport;

// Per-class one-vs-rest metrics plus support-weighted averages. Classes with
// zero support are reported but excluded from the averages.
auto multiclass_metrics(const ConfusionMatrix& matrix,
                        const std::vector<std::string>& class_names) -> MetricsReport;

auto format_report(const MetricsReport& report) -> std::string;
auto report_csv(const MetricsReport& report) -> std::string;
auto format_confusion(const ConfusionMatrix& matrix, const std::vector<std::string>& class_names)
    -> std::string;

struct TimingReport {
    double mean_us_per_flow = 0.0;
    double stddev_us_per_flow = 0.0;
    std::size_t repetitions = 0;
    std::size_t edges = 0;
};

// Wall-clock cost of eval-mode classification per flow, measured over
// `repetitions` timed runs after one warmup. Throws StateError on an empty
// graph.
auto time_classification(const FlowGraph& graph,
                         const ModelParams& params,
                         const ModelConfig& config,
                         std::size_t repetitions = 5) -> TimingReport;

} // namespace egsage
