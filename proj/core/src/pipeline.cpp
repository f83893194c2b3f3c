#include "egsage/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "egsage/errors.hpp"
#include "egsage/graph.hpp"
#include "egsage/version.hpp"

namespace egsage {

namespace {

auto percent(std::size_t part, std::size_t whole) -> std::string {
    char buffer[32];
    const double value = whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) /
                                                static_cast<double>(whole);
    std::snprintf(buffer, sizeof(buffer), "%.1f%%", value);
    return buffer;
}

auto csv_cell(const std::string& value) -> std::string {
    if (value.find_first_of(",\"\n") == std::string::npos) {
        return value;
    }
    std::string quoted = "\"";
    for (const char ch : value) {
        if (ch == '"') {
            quoted += "\"\"";
        } else {
            quoted.push_back(ch);
        }
    }
    quoted.push_back('"');
    return quoted;
}

auto model_class_table(const EncodedDataset& dataset, TargetMode targets)
    -> std::vector<std::string> {
    if (targets == TargetMode::binary) {
        return {dataset.class_names.front(), "Attack"};
    }
    return dataset.class_names;
}

} // namespace

auto encode_dataset(const std::filesystem::path& csv_path, const RunConfig& config)
    -> EncodeResult {
    auto parsed = parse_csv(csv_path, config.columns, config.benign_class);
    if (parsed.records.empty()) {
        throw SchemaError("encode: " + csv_path.string() + " has no usable data rows (" +
                          std::to_string(parsed.row_errors.size()) + " row errors)");
    }

    const auto split = split_records(parsed.records, config.seed, config.train_fraction,
                                     config.subsample_fraction, config.stratified);

    std::vector<RawRecord> retained;
    std::vector<Assignment> assignment;
    retained.reserve(parsed.records.size());
    for (std::size_t i = 0; i < parsed.records.size(); ++i) {
        if (split.assignment[i] != Assignment::excluded) {
            retained.push_back(std::move(parsed.records[i]));
            assignment.push_back(split.assignment[i]);
        }
    }
    if (retained.empty()) {
        throw SchemaError("encode: subsampling retained no records");
    }

    EncodeResult result;
    if (config.anonymize) {
        result.anonymization = anonymize_sources(std::span<RawRecord>(retained), config.seed);
    }

    std::vector<RawRecord> train_records;
    for (std::size_t i = 0; i < retained.size(); ++i) {
        if (assignment[i] == Assignment::train) {
            train_records.push_back(retained[i]);
        }
    }
    if (train_records.empty()) {
        throw SchemaError("encode: training split is empty; raise train_fraction");
    }

    EncodedDataset& dataset = result.dataset;
    dataset.schema = fit_schema(train_records, parsed.feature_columns, config.categorical_mode,
                                config.max_categories);

    std::set<std::string> attack_classes;
    for (const RawRecord& record : retained) {
        if (record.is_attack) {
            attack_classes.insert(record.attack_class);
        }
    }
    dataset.class_names.push_back(config.benign_class);
    dataset.class_names.insert(dataset.class_names.end(), attack_classes.begin(),
                               attack_classes.end());
    std::unordered_map<std::string, std::uint16_t> class_index;
    for (std::size_t i = 0; i < dataset.class_names.size(); ++i) {
        class_index.emplace(dataset.class_names[i], static_cast<std::uint16_t>(i));
    }

    EncodeCounters counters;
    dataset.records.reserve(retained.size());
    for (const RawRecord& record : retained) {
        EncodedRecord encoded;
        encoded.src_ip = record.src_ip;
        encoded.src_port = record.src_port;
        encoded.dst_ip = record.dst_ip;
        encoded.dst_port = record.dst_port;
        encoded.features = encode_features(dataset.schema, record, &counters);
        encoded.is_attack = record.is_attack;
        encoded.class_id = class_index.at(record.attack_class);
        encoded.flow_index = record.flow_index;
        dataset.records.push_back(std::move(encoded));
    }
    dataset.assignment = std::move(assignment);
    dataset.seed = config.seed;
    dataset.train_fraction = config.train_fraction;
    dataset.subsample_fraction = config.subsample_fraction;
    dataset.stratified = config.stratified;
    dataset.counters.row_errors = parsed.row_errors.size();
    dataset.counters.excluded_records = split.count(Assignment::excluded);
    dataset.counters.nan_values = counters.nan_values;
    dataset.counters.inf_values = counters.inf_values;
    dataset.counters.unknown_categories = counters.unknown_categories;
    dataset.counters.comment_lines = parsed.comment_lines;
    dataset.config_echo = config.echo();
    dataset.tool_version = version();

    std::ostringstream report;
    report << "input: " << csv_path.string() << "\n";
    report << "parsed flows: " << parsed.records.size() << " (" << parsed.row_errors.size()
           << " row errors, " << parsed.comment_lines << " comment lines)\n";
    report << "retained " << retained.size() << " of " << parsed.records.size() << " flows ("
           << percent(retained.size(), parsed.records.size()) << ") after subsampling\n";
    report << "train/test: " << split.count(Assignment::train) << "/"
           << split.count(Assignment::test) << " (train fraction "
           << format_double(config.train_fraction) << ", "
           << (config.stratified ? "stratified" : "unstratified") << ")\n";
    report << "anonymized sources: " << result.anonymization.mapping.size() << "\n";
    std::map<std::string, std::size_t> class_counts;
    for (const EncodedRecord& record : dataset.records) {
        ++class_counts[dataset.class_names[record.class_id]];
    }
    report << "classes:";
    for (const std::string& name : dataset.class_names) {
        report << " " << name << " (" << class_counts[name] << ")";
    }
    report << "\n";
    if (counters.nan_values + counters.inf_values + counters.unknown_categories > 0) {
        report << "encoding fallbacks: " << counters.nan_values << " NaN, "
               << counters.inf_values << " infinite, " << counters.unknown_categories
               << " unknown categories\n";
    }
    for (const std::string& warning : split.warnings) {
        report << "warning: " << warning << "\n";
    }
    constexpr std::size_t kMaxReportedErrors = 10;
    for (std::size_t i = 0; i < parsed.row_errors.size() && i < kMaxReportedErrors; ++i) {
        report << "row error (line " << parsed.row_errors[i].line
               << "): " << parsed.row_errors[i].message << "\n";
    }
    if (parsed.row_errors.size() > kMaxReportedErrors) {
        report << "... " << parsed.row_errors.size() - kMaxReportedErrors
               << " more row errors\n";
    }
    report << "\n" << schema_report(dataset.schema);
    result.report = report.str();
    return result;
}

auto dataset_graph(const EncodedDataset& dataset, Assignment split, bool joint) -> SplitGraph {
    SplitGraph out;
    const auto selected = dataset.indices(split);
    if (selected.empty()) {
        throw SchemaError("dataset has no records in the requested split");
    }
    if (joint) {
        std::vector<std::size_t> all(dataset.records.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            all[i] = i;
        }
        const auto records = dataset.flow_records(all);
        out.graph = build_graph(records, dataset.class_names);
        out.rows = selected;
    } else {
        const auto records = dataset.flow_records(selected);
        out.graph = build_graph(records, dataset.class_names);
        out.rows.resize(selected.size());
        for (std::size_t i = 0; i < selected.size(); ++i) {
            out.rows[i] = i;
        }
    }
    return out;
}

auto edge_targets(const FlowGraph& graph,
                  TargetMode mode,
                  const std::vector<std::string>& model_classes) -> std::vector<std::uint16_t> {
    std::vector<std::uint16_t> targets(graph.num_edges(), 0);
    if (mode == TargetMode::binary) {
        for (std::size_t e = 0; e < graph.num_edges(); ++e) {
            targets[e] = graph.edge_is_attack[e] != 0 ? 1 : 0;
        }
        return targets;
    }
    std::unordered_map<std::string, std::uint16_t> index;
    for (std::size_t i = 0; i < model_classes.size(); ++i) {
        index.emplace(model_classes[i], static_cast<std::uint16_t>(i));
    }
    std::vector<std::uint16_t> graph_to_model(graph.class_names.size(), 0);
    for (std::size_t i = 0; i < graph.class_names.size(); ++i) {
        const auto it = index.find(graph.class_names[i]);
        if (it == index.end()) {
            throw ArtifactError("class '" + graph.class_names[i] +
                                "' is not in the model's class table");
        }
        graph_to_model[i] = it->second;
    }
    for (std::size_t e = 0; e < graph.num_edges(); ++e) {
        targets[e] = graph_to_model[graph.edge_class[e]];
    }
    return targets;
}

auto train_model(const EncodedDataset& dataset, const RunConfig& config) -> TrainModelResult {
    const auto class_names = model_class_table(dataset, config.targets);
    if (config.targets == TargetMode::multiclass && dataset.class_names.size() < 2) {
        throw SchemaError("multiclass training needs at least 2 classes, dataset has " +
                          std::to_string(dataset.class_names.size()));
    }
    if (!config.class_weights.empty() && config.class_weights.size() != class_names.size()) {
        throw SchemaError("class_weights has " + std::to_string(config.class_weights.size()) +
                          " entries for " + std::to_string(class_names.size()) + " classes");
    }

    const auto split = dataset_graph(dataset, Assignment::train, false);
    const auto targets = edge_targets(split.graph, config.targets, class_names);

    const auto model_config = config.model_config(class_names.size());
    const auto result = train(split.graph, targets, model_config, config.train_config());

    TrainModelResult out;
    out.model.config = model_config;
    out.model.targets = config.targets;
    out.model.feature_dim = dataset.schema.feature_dim;
    out.model.schema = dataset.schema;
    out.model.class_names = class_names;
    out.model.params = result.params;
    out.model.config_echo = config.echo();
    out.model.tool_version = version();
    out.log = result.log;
    return out;
}

auto loss_log_csv(const std::vector<EpochStats>& log) -> std::string {
    std::string csv = "epoch,loss,train_accuracy\n";
    for (const EpochStats& stats : log) {
        csv += std::to_string(stats.epoch);
        csv += ",";
        csv += format_double(stats.loss);
        csv += ",";
        csv += format_double(stats.train_accuracy);
        csv += "\n";
    }
    return csv;
}

auto evaluate_model(const EncodedDataset& dataset,
                    const ModelArtifact& model,
                    const RunConfig& config) -> EvalResult {
    if (dataset.schema.feature_dim != model.feature_dim) {
        throw DimensionError("model expects " + std::to_string(model.feature_dim) +
                             " feature dimensions, dataset encodes " +
                             std::to_string(dataset.schema.feature_dim));
    }

    const auto split = dataset_graph(dataset, config.eval_split, config.joint_graph);
    const auto output = forward(split.graph, model.params, model.config, Mode::eval);
    const auto all_targets = edge_targets(split.graph, model.targets, model.class_names);

    std::vector<std::uint16_t> labels;
    std::vector<std::uint16_t> predictions;
    labels.reserve(split.rows.size());
    predictions.reserve(split.rows.size());
    for (const std::size_t row : split.rows) {
        labels.push_back(all_targets[row]);
        std::size_t best = 0;
        for (std::size_t c = 1; c < model.config.num_classes; ++c) {
            if (output.log_probs(row, c) > output.log_probs(row, best)) {
                best = c;
            }
        }
        predictions.push_back(static_cast<std::uint16_t>(best));
    }

    EvalResult result;
    result.confusion = confusion(labels, predictions, model.config.num_classes);
    result.metrics = model.targets == TargetMode::binary
                         ? binary_metrics(result.confusion, model.class_names)
                         : multiclass_metrics(result.confusion, model.class_names);

    std::ostringstream text;
    text << (model.targets == TargetMode::binary ? "Binary" : "Multiclass")
         << " classification, "
         << (config.eval_split == Assignment::train ? "train" : "test") << " split ("
         << (config.joint_graph ? "joint" : "separate") << " graph), " << labels.size()
         << " flows\n\n";
    text << format_report(result.metrics) << "\n";
    text << format_confusion(result.confusion, model.class_names);
    result.text = text.str();
    result.csv = report_csv(result.metrics);
    return result;
}

auto predict_flows(const std::filesystem::path& csv_path,
                   const ModelArtifact& model,
                   const RunConfig& config) -> PredictResult {
    auto parsed = parse_csv(csv_path, config.columns, config.benign_class, false);

    PredictResult result;
    result.row_errors = parsed.row_errors;

    std::ostringstream csv;
    csv << "flow_index,src_ip,src_port,dst_ip,dst_port,predicted_class";
    for (const std::string& name : model.class_names) {
        csv << ",log_prob_" << csv_cell(name);
    }
    csv << "\n";

    if (!parsed.records.empty()) {
        // Labels are ignored for prediction; neutralize the class so the
        // graph builder accepts flows whose ground truth the model never saw.
        std::vector<FlowRecord> flows;
        flows.reserve(parsed.records.size());
        for (const RawRecord& record : parsed.records) {
            FlowRecord flow = encode_record(model.schema, record);
            flow.is_attack = false;
            flow.attack_class = model.class_names.front();
            flows.push_back(std::move(flow));
        }
        const auto graph = build_graph(flows, model.class_names);
        const auto output = forward(graph, model.params, model.config, Mode::eval);
        for (std::size_t e = 0; e < graph.num_edges(); ++e) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < model.config.num_classes; ++c) {
                if (output.log_probs(e, c) > output.log_probs(e, best)) {
                    best = c;
                }
            }
            csv << flows[e].flow_index << ',' << format_ipv4(flows[e].src_ip) << ','
                << flows[e].src_port << ',' << format_ipv4(flows[e].dst_ip) << ','
                << flows[e].dst_port << ',' << csv_cell(model.class_names[best]);
            for (std::size_t c = 0; c < model.config.num_classes; ++c) {
                csv << ',' << format_double(output.log_probs(e, c));
            }
            csv << "\n";
        }
        result.rows = graph.num_edges();
    }
    result.csv = csv.str();
    return result;
}

auto export_embeddings_csv(const EncodedDataset& dataset,
                           const ModelArtifact& model,
                           const RunConfig& config) -> std::string {
    if (dataset.schema.feature_dim != model.feature_dim) {
        throw DimensionError("model expects " + std::to_string(model.feature_dim) +
                             " feature dimensions, dataset encodes " +
                             std::to_string(dataset.schema.feature_dim));
    }
    const auto split = dataset_graph(dataset, config.eval_split, config.joint_graph);
    const auto output = forward(split.graph, model.params, model.config, Mode::eval);
    const Matrix& embeddings = output.embeddings.edge_embeddings;

    std::ostringstream csv;
    csv << "flow_index";
    for (std::size_t c = 0; c < embeddings.cols(); ++c) {
        csv << ",e" << c;
    }
    csv << "\n";
    for (const std::size_t row : split.rows) {
        csv << split.graph.edge_flow_index[row];
        for (std::size_t c = 0; c < embeddings.cols(); ++c) {
            csv << ',' << format_double(embeddings(row, c));
        }
        csv << "\n";
    }
    return csv.str();
}

} // namespace egsage
