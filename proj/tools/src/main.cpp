#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "egsage/config.hpp"
#include "egsage/errors.hpp"
#include "egsage/metrics.hpp"
#include "egsage/pipeline.hpp"
#include "egsage/serialize.hpp"
#include "egsage/synthetic.hpp"
#include "egsage/version.hpp"

namespace {

using namespace egsage;

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileError("cannot open " + path + " for writing");
    }
    out << content;
    if (!out) {
        throw FileError("failed writing " + path);
    }
}

// Ties CLI flags to RunConfig keys. Flag values are applied through the same
// parser as config file entries, after the file, so the flag wins.
class FlagSet {
  public:
    explicit FlagSet(CLI::App* cmd) : cmd_(cmd) {
        config_option_ = cmd->add_option("--config", config_path_,
                                         "Config file (one key = value per line, # comments)");
    }

    void option(const std::string& flag, const std::string& key, const std::string& help) {
        entries_.push_back(std::make_unique<Entry>());
        Entry* entry = entries_.back().get();
        entry->key = key;
        entry->opt = cmd_->add_option(flag, entry->value, help);
    }

    auto resolve() const -> RunConfig {
        RunConfig config;
        apply_env_seed(config);
        if (config_option_->count() > 0) {
            apply_config_file(config, config_path_);
        }
        for (const auto& entry : entries_) {
            if (entry->opt->count() > 0) {
                apply_config_value(config, entry->key, entry->value);
            }
        }
        return config;
    }

  private:
    struct Entry {
        std::string key;
        std::string value;
        CLI::Option* opt = nullptr;
    };

    CLI::App* cmd_;
    CLI::Option* config_option_ = nullptr;
    std::string config_path_;
    std::vector<std::unique_ptr<Entry>> entries_;
};

void add_ingest_flags(FlagSet& flags) {
    flags.option("--seed", "seed", "RNG seed (default 0, or EGS_SEED)");
    flags.option("--train-fraction", "train_fraction", "Training split fraction (default 0.7)");
    flags.option("--subsample", "subsample_fraction",
                 "Keep this fraction of flows before splitting (default 1.0)");
    flags.option("--stratified", "stratified", "Stratify the split by class: true|false");
    flags.option("--anonymize", "anonymize", "Replace source IPs: true|false (default true)");
    flags.option("--benign-class", "benign_class", "Benign class name (default Benign)");
    flags.option("--categorical-mode", "categorical_mode",
                 "Categorical column handling: one_hot|drop");
    flags.option("--max-categories", "max_categories",
                 "One-hot cardinality limit (default 32)");
    flags.option("--src-ip-column", "src_ip_column", "Source IP column name");
    flags.option("--src-port-column", "src_port_column", "Source port column name");
    flags.option("--dst-ip-column", "dst_ip_column", "Destination IP column name");
    flags.option("--dst-port-column", "dst_port_column", "Destination port column name");
    flags.option("--label-column", "label_column", "Binary label column name");
    flags.option("--class-column", "class_column", "Attack class column name");
}

void add_model_flags(FlagSet& flags) {
    flags.option("--layers", "layers", "Message passing layers (default 2)");
    flags.option("--hidden", "hidden", "Hidden width (default 128)");
    flags.option("--dropout", "dropout", "Dropout rate between layers (default 0.2)");
    flags.option("--sample", "neighbor_sample_size",
                 "Neighbors sampled per node in training: full|N (default full)");
    flags.option("--neighbor-source", "neighbor_source",
                 "Aggregation input past layer 1: edge_features|node_embeddings");
}

void add_train_flags(FlagSet& flags) {
    flags.option("--classes", "targets", "Target mode: binary|multi (default binary)");
    flags.option("--lr", "learning_rate", "Adam learning rate (default 0.001)");
    flags.option("--beta1", "beta1", "Adam beta1 (default 0.9)");
    flags.option("--beta2", "beta2", "Adam beta2 (default 0.999)");
    flags.option("--epsilon", "epsilon", "Adam epsilon (default 1e-8)");
    flags.option("--epochs", "epochs", "Training epochs (default 200)");
    flags.option("--class-weights", "class_weights",
                 "Comma-separated per-class loss weights (default uniform)");
    flags.option("--seed", "seed", "RNG seed (default 0, or EGS_SEED)");
}

void add_eval_flags(FlagSet& flags) {
    flags.option("--split", "eval_split", "Split to evaluate: test|train (default test)");
    flags.option("--joint-graph", "joint_graph",
                 "Build one graph over both splits, evaluate the chosen one: true|false");
}

void run_encode(const std::string& input,
                const std::string& data_out,
                const std::string& report_out,
                const RunConfig& config) {
    const auto result = encode_dataset(input, config);
    save_dataset(data_out, result.dataset);
    std::cout << result.report;
    std::cout << "dataset written to " << data_out << "\n";
    if (!report_out.empty()) {
        write_text_file(report_out, result.report);
    }
}

void run_train(const std::string& data,
               const std::string& model_out,
               const std::string& loss_log,
               const RunConfig& config) {
    const auto dataset = load_dataset(data);
    const auto result = train_model(dataset, config);
    save_model(model_out, result.model);
    if (!loss_log.empty()) {
        write_text_file(loss_log, loss_log_csv(result.log));
    }
    if (!result.log.empty()) {
        std::cout << "trained " << result.log.size() << " epochs, loss "
                  << format_double(result.log.front().loss) << " -> "
                  << format_double(result.log.back().loss) << ", train accuracy "
                  << format_double(result.log.back().train_accuracy) << "\n";
    } else {
        std::cout << "epochs = 0, wrote the initialized model\n";
    }
    std::cout << "model written to " << model_out << "\n";
}

void run_eval(const std::string& data,
              const std::string& model_path,
              const std::string& report_out,
              const std::string& csv_out,
              std::size_t timing_reps,
              const RunConfig& config) {
    const auto dataset = load_dataset(data);
    const auto model = load_model(model_path);
    const auto result = evaluate_model(dataset, model, config);
    std::cout << result.text;
    if (!report_out.empty()) {
        write_text_file(report_out, result.text);
    }
    if (!csv_out.empty()) {
        write_text_file(csv_out, result.csv);
    }
    if (timing_reps > 0) {
        const auto split = dataset_graph(dataset, config.eval_split, config.joint_graph);
        const auto timing = time_classification(split.graph, model.params, model.config,
                                                timing_reps);
        std::cout << "classification time: " << format_double(timing.mean_us_per_flow)
                  << " us/flow (stddev " << format_double(timing.stddev_us_per_flow) << ", "
                  << timing.repetitions << " reps, " << timing.edges << " flows)\n";
    }
}

void run_predict(const std::string& input,
                 const std::string& model_path,
                 const std::string& predictions_out,
                 const RunConfig& config) {
    const auto model = load_model(model_path);
    const auto result = predict_flows(input, model, config);
    write_text_file(predictions_out, result.csv);
    for (const auto& error : result.row_errors) {
        std::cerr << "row error (line " << error.line << "): " << error.message << "\n";
    }
    std::cout << "classified " << result.rows << " flows (" << result.row_errors.size()
              << " row errors), predictions written to " << predictions_out << "\n";
}

void run_export_embeddings(const std::string& data,
                           const std::string& model_path,
                           const std::string& out,
                           const RunConfig& config) {
    const auto dataset = load_dataset(data);
    const auto model = load_model(model_path);
    write_text_file(out, export_embeddings_csv(dataset, model, config));
    std::cout << "embeddings written to " << out << "\n";
}

void run_synth(const std::string& scenario,
               std::size_t flows,
               std::size_t endpoints,
               std::size_t feature_dim,
               double signal,
               std::uint64_t seed,
               const std::string& priors,
               const std::string& out) {
    ScenarioSpec spec;
    if (scenario == "feature_separable") {
        spec.scenario = Scenario::feature_separable;
    } else if (scenario == "topology_only") {
        spec.scenario = Scenario::topology_only;
    } else if (scenario == "mixed") {
        spec.scenario = Scenario::mixed;
    } else {
        throw SchemaError("unknown scenario '" + scenario +
                          "', expected feature_separable, topology_only or mixed");
    }
    spec.num_flows = flows;
    spec.num_endpoints = endpoints;
    spec.feature_dim = feature_dim;
    spec.signal = signal;
    spec.seed = seed;
    if (!priors.empty()) {
        std::vector<ClassSpec> classes;
        std::stringstream stream(priors);
        std::string item;
        while (std::getline(stream, item, ',')) {
            char* end = nullptr;
            const double prior = std::strtod(item.c_str(), &end);
            if (end != item.c_str() + item.size() || item.empty()) {
                throw SchemaError("--priors: '" + item + "' is not a number");
            }
            classes.push_back({"", prior});
        }
        for (std::size_t i = 0; i < classes.size(); ++i) {
            if (i == 0) {
                classes[i].name = "Benign";
            } else if (classes.size() == 2) {
                classes[i].name = "Attack";
            } else {
                classes[i].name = "Attack" + std::to_string(i);
            }
        }
        spec.classes = std::move(classes);
    }
    const auto records = generate(spec);
    write_flow_csv(out, records,
                   "synthetic scenario=" + scenario + " flows=" + std::to_string(flows) +
                       " endpoints=" + std::to_string(endpoints) +
                       " signal=" + format_double(signal) + " seed=" + std::to_string(seed));
    std::cout << "wrote " << records.size() << " flows to " << out << "\n";
}

void run_graph(const std::string& data,
               const std::string& out,
               const std::string& split,
               const RunConfig& config) {
    const auto dataset = load_dataset(data);
    FlowGraph graph;
    if (split == "all") {
        std::vector<std::size_t> all(dataset.records.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            all[i] = i;
        }
        graph = build_graph(dataset.flow_records(all), dataset.class_names);
    } else if (split == "train" || split == "test") {
        graph = dataset_graph(dataset, split == "train" ? Assignment::train : Assignment::test,
                              false)
                    .graph;
    } else {
        throw SchemaError("--split: expected train, test or all, got '" + split + "'");
    }
    save_graph(out, graph, config.echo());
    std::cout << "graph with " << graph.num_nodes() << " nodes and " << graph.num_edges()
              << " edges written to " << out << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"E-GraphSAGE flow classification pipeline"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    auto* encode = app.add_subcommand("encode", "Encode a flow CSV into a dataset artifact");
    std::string encode_input;
    std::string encode_data_out;
    std::string encode_report_out;
    encode->add_option("--input", encode_input, "Flow CSV to encode")->required();
    encode->add_option("--data-out", encode_data_out, "Dataset artifact path")->required();
    encode->add_option("--report-out", encode_report_out, "Also write the report here");
    FlagSet encode_flags(encode);
    add_ingest_flags(encode_flags);

    auto* train = app.add_subcommand("train", "Train a model on a dataset's training split");
    std::string train_data;
    std::string train_model_out;
    std::string train_loss_log;
    train->add_option("--data", train_data, "Dataset artifact")->required();
    train->add_option("--model-out", train_model_out, "Model artifact path")->required();
    train->add_option("--loss-log", train_loss_log, "Per-epoch loss CSV path");
    FlagSet train_flags(train);
    add_model_flags(train_flags);
    add_train_flags(train_flags);

    auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset split");
    std::string eval_data;
    std::string eval_model;
    std::string eval_report_out;
    std::string eval_csv_out;
    std::size_t eval_timing = 0;
    eval->add_option("--data", eval_data, "Dataset artifact")->required();
    eval->add_option("--model", eval_model, "Model artifact")->required();
    eval->add_option("--report-out", eval_report_out, "Write the text report here");
    eval->add_option("--csv-out", eval_csv_out, "Write the metrics CSV here");
    eval->add_option("--timing", eval_timing,
                     "Also time eval-mode classification over N repetitions");
    FlagSet eval_flags(eval);
    add_eval_flags(eval_flags);

    auto* predict = app.add_subcommand("predict", "Classify a raw flow CSV with a trained model");
    std::string predict_input;
    std::string predict_model;
    std::string predict_out;
    predict->add_option("--input", predict_input, "Flow CSV (label columns optional)")
        ->required();
    predict->add_option("--model", predict_model, "Model artifact")->required();
    predict->add_option("--predictions-out", predict_out, "Predictions CSV path")->required();
    FlagSet predict_flags(predict);
    predict_flags.option("--benign-class", "benign_class", "Benign class name");
    predict_flags.option("--src-ip-column", "src_ip_column", "Source IP column name");
    predict_flags.option("--src-port-column", "src_port_column", "Source port column name");
    predict_flags.option("--dst-ip-column", "dst_ip_column", "Destination IP column name");
    predict_flags.option("--dst-port-column", "dst_port_column", "Destination port column name");
    predict_flags.option("--label-column", "label_column", "Binary label column name");
    predict_flags.option("--class-column", "class_column", "Attack class column name");

    auto* embeddings =
        app.add_subcommand("export-embeddings", "Write a split's edge embeddings as CSV");
    std::string emb_data;
    std::string emb_model;
    std::string emb_out;
    embeddings->add_option("--data", emb_data, "Dataset artifact")->required();
    embeddings->add_option("--model", emb_model, "Model artifact")->required();
    embeddings->add_option("--out", emb_out, "Embeddings CSV path")->required();
    FlagSet emb_flags(embeddings);
    add_eval_flags(emb_flags);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic flow CSV");
    std::string synth_scenario = "feature_separable";
    std::size_t synth_flows = 10000;
    std::size_t synth_endpoints = 1000;
    std::size_t synth_dim = 4;
    double synth_signal = 1.0;
    std::uint64_t synth_seed = 0;
    std::string synth_priors;
    std::string synth_out;
    synth->add_option("--scenario", synth_scenario,
                      "feature_separable|topology_only|mixed (default feature_separable)");
    synth->add_option("--flows", synth_flows, "Flow count (default 10000)");
    synth->add_option("--endpoints", synth_endpoints, "Endpoint count (default 1000)");
    synth->add_option("--feature-dim", synth_dim, "Feature dimensions (default 4)");
    synth->add_option("--signal", synth_signal, "Class separation strength (default 1.0)");
    synth->add_option("--seed", synth_seed, "RNG seed (default 0)");
    synth->add_option("--priors", synth_priors,
                      "Comma-separated class priors, benign first (default 0.8,0.2)");
    synth->add_option("--out", synth_out, "Output CSV path")->required();

    auto* graph = app.add_subcommand("graph", "Export a dataset split as a graph artifact");
    std::string graph_data;
    std::string graph_out;
    std::string graph_split = "all";
    graph->add_option("--data", graph_data, "Dataset artifact")->required();
    graph->add_option("--out", graph_out, "Graph artifact path")->required();
    graph->add_option("--split", graph_split, "train|test|all (default all)");
    FlagSet graph_flags(graph);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(encode)) {
            run_encode(encode_input, encode_data_out, encode_report_out, encode_flags.resolve());
        } else if (app.got_subcommand(train)) {
            run_train(train_data, train_model_out, train_loss_log, train_flags.resolve());
        } else if (app.got_subcommand(eval)) {
            run_eval(eval_data, eval_model, eval_report_out, eval_csv_out, eval_timing,
                     eval_flags.resolve());
        } else if (app.got_subcommand(predict)) {
            run_predict(predict_input, predict_model, predict_out, predict_flags.resolve());
        } else if (app.got_subcommand(embeddings)) {
            run_export_embeddings(emb_data, emb_model, emb_out, emb_flags.resolve());
        } else if (app.got_subcommand(synth)) {
            run_synth(synth_scenario, synth_flows, synth_endpoints, synth_dim, synth_signal,
                      synth_seed, synth_priors, synth_out);
        } else if (app.got_subcommand(graph)) {
            run_graph(graph_data, graph_out, graph_split, graph_flags.resolve());
        }
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FileError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ArtifactError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
