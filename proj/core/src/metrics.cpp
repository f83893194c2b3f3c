#include "egsage/metrics.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "egsage/config.hpp"
#include "egsage/errors.hpp"

namespace egsage {

namespace {

// 0/0 yields 0 and raises the caller's degenerate flag.
auto safe_rate(std::int64_t numerator, std::int64_t denominator, bool& degenerate) -> double {
    if (denominator == 0) {
        if (numerator != 0) {
            throw StateError("metrics: rate with zero denominator but nonzero numerator");
        }
        degenerate = true;
        return 0.0;
    }
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

auto class_metrics_for(const ConfusionMatrix& matrix,
                       std::size_t cls,
                       const std::string& name) -> ClassMetrics {
    ClassMetrics out;
    out.name = name;
    const std::int64_t tp = matrix.at(cls, cls);
    const std::int64_t fn = matrix.row_sum(cls) - tp;
    const std::int64_t fp = matrix.col_sum(cls) - tp;
    out.support = matrix.row_sum(cls);
    out.recall = safe_rate(tp, tp + fn, out.degenerate);
    out.precision = safe_rate(tp, tp + fp, out.degenerate);
    if (out.precision + out.recall == 0.0) {
        out.degenerate = true;
        out.f1 = 0.0;
    } else {
        out.f1 = 2.0 * (out.precision * out.recall) / (out.precision + out.recall);
    }
    return out;
}

void fill_weighted_averages(MetricsReport& report) {
    double support_total = 0.0;
    double recall_acc = 0.0;
    double precision_acc = 0.0;
    double f1_acc = 0.0;
    for (const ClassMetrics& cls : report.per_class) {
        if (cls.support == 0) {
            continue;
        }
        const auto support = static_cast<double>(cls.support);
        support_total += support;
        recall_acc += support * cls.recall;
        precision_acc += support * cls.precision;
        f1_acc += support * cls.f1;
    }
    if (support_total > 0.0) {
        report.weighted_recall = recall_acc / support_total;
        report.weighted_precision = precision_acc / support_total;
        report.weighted_f1 = f1_acc / support_total;
    }
}

} // namespace

auto ConfusionMatrix::total() const -> std::int64_t {
    std::int64_t acc = 0;
    for (std::int64_t c : counts) {
        acc += c;
    }
    return acc;
}

auto ConfusionMatrix::row_sum(std::size_t truth) const -> std::int64_t {
    std::int64_t acc = 0;
    for (std::size_t p = 0; p < num_classes; ++p) {
        acc += at(truth, p);
    }
    return acc;
}

auto ConfusionMatrix::col_sum(std::size_t predicted) const -> std::int64_t {
    std::int64_t acc = 0;
    for (std::size_t t = 0; t < num_classes; ++t) {
        acc += at(t, predicted);
    }
    return acc;
}

auto confusion(std::span<const std::uint16_t> labels,
               std::span<const std::uint16_t> predictions,
               std::size_t num_classes) -> ConfusionMatrix {
    if (labels.size() != predictions.size()) {
        throw DimensionError("confusion: " + std::to_string(labels.size()) + " labels vs " +
                             std::to_string(predictions.size()) + " predictions");
    }
    ConfusionMatrix matrix(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes || predictions[i] >= num_classes) {
            throw ArtifactError("confusion: class index out of range at row " + std::to_string(i));
        }
        ++matrix.at(labels[i], predictions[i]);
    }
    return matrix;
}

auto MetricsReport::headline() const -> ClassMetrics {
    if (binary && per_class.size() == 2) {
        return per_class[1];
    }
    ClassMetrics avg;
    avg.name = "Weighted Average";
    avg.recall = weighted_recall;
    avg.precision = weighted_precision;
    avg.f1 = weighted_f1;
    for (const ClassMetrics& cls : per_class) {
        avg.support += cls.support;
    }
    return avg;
}

auto binary_metrics(const ConfusionMatrix& matrix, const std::vector<std::string>& class_names)
    -> MetricsReport {
    if (matrix.num_classes != 2) {
        throw DimensionError("binary_metrics: confusion matrix has " +
                             std::to_string(matrix.num_classes) + " classes, expected 2");
    }
    MetricsReport report = multiclass_metrics(matrix, class_names);
    report.binary = true;
    const std::int64_t tn = matrix.at(0, 0);
    const std::int64_t fp = matrix.at(0, 1);
    bool degenerate = false;
    report.far = safe_rate(fp, fp + tn, degenerate);
    report.far_degenerate = degenerate;
    return report;
}

auto multiclass_metrics(const ConfusionMatrix& matrix, const std::vector<std::string>& class_names)
    -> MetricsReport {
    if (class_names.size() != matrix.num_classes) {
        throw DimensionError("multiclass_metrics: " + std::to_string(class_names.size()) +
                             " names for " + std::to_string(matrix.num_classes) + " classes");
    }
    MetricsReport report;
    const std::int64_t total = matrix.total();
    std::int64_t diagonal = 0;
    for (std::size_t c = 0; c < matrix.num_classes; ++c) {
        diagonal += matrix.at(c, c);
        report.per_class.push_back(class_metrics_for(matrix, c, class_names[c]));
    }
    bool degenerate = false;
    report.accuracy = safe_rate(diagonal, total, degenerate);
    fill_weighted_averages(report);
    return report;
}

auto format_report(const MetricsReport& report) -> std::string {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    if (report.binary) {
        const ClassMetrics& attack = report.per_class[1];
        out << "Accuracy  " << report.accuracy << "\n";
        out << "Precision " << attack.precision << "\n";
        out << "F1        " << attack.f1 << "\n";
        out << "DR        " << attack.recall << "\n";
        out << "FAR       " << report.far.value_or(0.0) << (report.far_degenerate ? " (degenerate)" : "")
            << "\n\n";
    }
    out << std::left << std::setw(24) << "Class" << std::right << std::setw(10) << "DR"
        << std::setw(12) << "Precision" << std::setw(10) << "F1" << std::setw(12) << "Support"
        << "\n";
    const auto row = [&out](const std::string& name, double dr, double precision, double f1,
                            std::int64_t support, bool degenerate) {
        out << std::left << std::setw(24) << name << std::right << std::setw(10) << dr
            << std::setw(12) << precision << std::setw(10) << f1 << std::setw(12) << support
            << (degenerate ? "  (degenerate)" : "") << "\n";
    };
    for (const ClassMetrics& cls : report.per_class) {
        row(cls.name, cls.recall, cls.precision, cls.f1, cls.support, cls.degenerate);
    }
    std::int64_t support_total = 0;
    for (const ClassMetrics& cls : report.per_class) {
        support_total += cls.support;
    }
    row("Weighted Average", report.weighted_recall, report.weighted_precision, report.weighted_f1,
        support_total, false);
    if (!report.binary) {
        out << "\nAccuracy  " << report.accuracy << "\n";
    }
    return out.str();
}

auto report_csv(const MetricsReport& report) -> std::string {
    std::ostringstream out;
    out << "class,dr,precision,f1,support,degenerate\n";
    for (const ClassMetrics& cls : report.per_class) {
        out << cls.name << ',' << format_double(cls.recall) << ',' << format_double(cls.precision)
            << ',' << format_double(cls.f1) << ',' << cls.support << ','
            << (cls.degenerate ? 1 : 0) << "\n";
    }
    std::int64_t support_total = 0;
    for (const ClassMetrics& cls : report.per_class) {
        support_total += cls.support;
    }
    out << "weighted_average," << format_double(report.weighted_recall) << ','
        << format_double(report.weighted_precision) << ',' << format_double(report.weighted_f1)
        << ',' << support_total << ",0\n";
    out << "accuracy," << format_double(report.accuracy) << ",,,,\n";
    if (report.far.has_value()) {
        out << "far," << format_double(*report.far) << ",,,,"
            << (report.far_degenerate ? 1 : 0) << "\n";
    }
    return out.str();
}

auto format_confusion(const ConfusionMatrix& matrix, const std::vector<std::string>& class_names)
    -> std::string {
    if (class_names.size() != matrix.num_classes) {
        throw DimensionError("format_confusion: " + std::to_string(class_names.size()) +
                             " names for " + std::to_string(matrix.num_classes) + " classes");
    }
    std::ostringstream out;
    out << "Confusion matrix (rows true, columns predicted)\n";
    out << std::left << std::setw(24) << "";
    for (const auto& name : class_names) {
        out << std::right << std::setw(14) << name;
    }
    out << "\n";
    for (std::size_t t = 0; t < matrix.num_classes; ++t) {
        out << std::left << std::setw(24) << class_names[t];
        for (std::size_t p = 0; p < matrix.num_classes; ++p) {
            out << std::right << std::setw(14) << matrix.at(t, p);
        }
        out << "\n";
    }
    return out.str();
}

auto time_classification(const FlowGraph& graph,
                         const ModelParams& params,
                         const ModelConfig& config,
                         std::size_t repetitions) -> TimingReport {
    if (graph.num_edges() == 0) {
        throw StateError("time_classification: graph has no edges");
    }
    if (repetitions == 0) {
        throw StateError("time_classification: repetitions must be positive");
    }
    using clock = std::chrono::steady_clock;
    forward(graph, params, config, Mode::eval);

    std::vector<double> per_flow_us;
    per_flow_us.reserve(repetitions);
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        const auto start = clock::now();
        forward(graph, params, config, Mode::eval);
        const auto stop = clock::now();
        const double micros =
            std::chrono::duration_cast<std::chrono::duration<double, std::micro>>(stop - start)
                .count();
        per_flow_us.push_back(micros / static_cast<double>(graph.num_edges()));
    }

    TimingReport report;
    report.repetitions = repetitions;
    report.edges = graph.num_edges();
    for (double x : per_flow_us) {
        report.mean_us_per_flow += x;
    }
    report.mean_us_per_flow /= static_cast<double>(repetitions);
    double variance = 0.0;
    for (double x : per_flow_us) {
        const double centered = x - report.mean_us_per_flow;
        variance += centered * centered;
    }
    variance /= static_cast<double>(repetitions);
    report.stddev_us_per_flow = std::sqrt(variance);
    return report;
}

} // namespace egsage
