#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "egsage/errors.hpp"
#include "egsage/graph.hpp"
#include "egsage/model.hpp"
#include "egsage/pipeline.hpp"
#include "egsage/rng.hpp"
#include "egsage/synthetic.hpp"
#include "helpers.hpp"

using namespace egsage;
using egsage::testing::TempDir;
using egsage::testing::max_abs_diff;
using egsage::testing::write_text;

namespace {

// Small feature_separable corpus written to disk, the shared input for the
// stage tests below.
auto write_corpus(const TempDir& dir,
                  std::size_t flows = 300,
                  std::size_t dim = 3,
                  std::uint64_t seed = 4) -> std::filesystem::path {
    ScenarioSpec spec;
    spec.scenario = Scenario::feature_separable;
    spec.num_flows = flows;
    spec.num_endpoints = 60;
    spec.feature_dim = dim;
    spec.signal = 3.0;
    spec.seed = seed;
    const auto path = dir.file("flows_" + std::to_string(dim) + ".csv");
    write_flow_csv(path.string(), generate(spec));
    return path;
}

auto quick_config() -> RunConfig {
    RunConfig config;
    config.seed = 4;
    config.hidden = 8;
    config.layers = 2;
    config.dropout = 0.0;
    config.epochs = 3;
    config.learning_rate = 0.01;
    return config;
}

auto count_lines(const std::string& text) -> std::size_t {
    std::size_t lines = 0;
    for (const char ch : text) {
        if (ch == '\n') {
            ++lines;
        }
    }
    return lines;
}

auto split_cells(const std::string& line) -> std::vector<std::string> {
    std::vector<std::string> cells;
    std::stringstream stream(line);
    std::string cell;
    while (std::getline(stream, cell, ',')) {
        cells.push_back(cell);
    }
    return cells;
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("encode_dataset parses, splits and encodes a flow csv") {
    TempDir dir;
    const auto path = write_corpus(dir);
    const auto config = quick_config();
    const EncodeResult result = encode_dataset(path, config);
    const EncodedDataset& dataset = result.dataset;

    CHECK(dataset.records.size() == 300);
    CHECK(dataset.assignment.size() == 300);
    CHECK(dataset.schema.feature_dim == 3);
    REQUIRE(dataset.class_names.size() == 2);
    CHECK(dataset.class_names[0] == "Benign");
    CHECK(dataset.class_names[1] == "Attack");
    CHECK(dataset.counters.row_errors == 0);
    CHECK(dataset.counters.comment_lines == 0);
    CHECK(dataset.counters.excluded_records == 0);
    CHECK(dataset.seed == 4);

    const auto train = dataset.indices(Assignment::train);
    const auto test = dataset.indices(Assignment::test);
    CHECK(train.size() + test.size() == 300);
    CHECK(train.size() > 180);
    CHECK(train.size() < 240);

    for (const EncodedRecord& record : dataset.records) {
        REQUIRE(record.features.size() == 3);
        CHECK(record.is_attack == (record.class_id != 0));
    }

    CHECK(result.report.find("input: " + path.string()) != std::string::npos);
    CHECK(result.report.find("parsed flows: 300 (0 row errors, 0 comment lines)") !=
          std::string::npos);
    CHECK(result.report.find("train/test: " + std::to_string(train.size()) + "/" +
                             std::to_string(test.size())) != std::string::npos);
    CHECK(result.report.find("classes: Benign (") != std::string::npos);
    CHECK(result.report.find("f0") != std::string::npos);
}

TEST_CASE("encode_dataset anonymizes sources only when asked") {
    TempDir dir;
    const auto path = write_corpus(dir);

    auto config = quick_config();
    const auto anonymized = encode_dataset(path, config);
    CHECK(anonymized.anonymization.mapping.size() > 0);
    CHECK(anonymized.report.find("anonymized sources: " + std::to_string(
              anonymized.anonymization.mapping.size())) != std::string::npos);

    config.anonymize = false;
    const auto plain = encode_dataset(path, config);
    CHECK(plain.anonymization.mapping.empty());
    // The generator allocates sources from 10.0.0.1 upward; without
    // anonymization those addresses survive encoding.
    bool saw_original = false;
    for (const EncodedRecord& record : plain.dataset.records) {
        if (record.src_ip >= 0x0A000001u && record.src_ip <= 0x0A000001u + 60) {
            saw_original = true;
        }
    }
    CHECK(saw_original);

    std::set<std::uint32_t> anon_sources;
    for (const EncodedRecord& record : anonymized.dataset.records) {
        anon_sources.insert(record.src_ip);
    }
    std::set<std::uint32_t> plain_sources;
    for (const EncodedRecord& record : plain.dataset.records) {
        plain_sources.insert(record.src_ip);
    }
    CHECK(anon_sources.size() == plain_sources.size());
    CHECK(anon_sources != plain_sources);
}

TEST_CASE("subsampling retains the requested share and reports it") {
    TempDir dir;
    const auto path = write_corpus(dir, 400);
    auto config = quick_config();
    config.subsample_fraction = 0.5;
    const auto result = encode_dataset(path, config);
    CHECK(result.dataset.records.size() == 200);
    CHECK(result.dataset.counters.excluded_records == 200);
    CHECK(result.report.find("retained 200 of 400 flows (50.0%)") != std::string::npos);
}

TEST_CASE("encode_dataset needs at least one usable row") {
    TempDir dir;
    const auto path = dir.file("broken.csv");
    write_text(path, "IPV4_SRC_ADDR,L4_SRC_PORT,IPV4_DST_ADDR,L4_DST_PORT,f0,Label,Attack\n"
                     "10.0.0.1,80,10.0.0.2\n"
                     "not-an-ip,80,10.0.0.2,443,1.0,0,Benign\n");
    try {
        encode_dataset(path, quick_config());
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        const std::string what = e.what();
        CHECK(what.find("no usable data rows") != std::string::npos);
        CHECK(what.find("2 row errors") != std::string::npos);
    }
}

TEST_CASE("train_model produces a self-describing artifact") {
    TempDir dir;
    const auto path = write_corpus(dir);
    const auto config = quick_config();
    const auto dataset = encode_dataset(path, config).dataset;
    const TrainModelResult result = train_model(dataset, config);

    CHECK(result.model.feature_dim == 3);
    CHECK(result.model.targets == TargetMode::binary);
    REQUIRE(result.model.class_names.size() == 2);
    CHECK(result.model.class_names[0] == "Benign");
    CHECK(result.model.class_names[1] == "Attack");
    CHECK(result.model.config.num_classes == 2);
    CHECK(result.model.config.hidden == 8);
    CHECK(result.model.schema.feature_dim == dataset.schema.feature_dim);
    CHECK(result.model.config_echo == config.echo());
    REQUIRE(result.log.size() == 3);
    for (std::size_t i = 0; i < result.log.size(); ++i) {
        CHECK(result.log[i].epoch == i);
        CHECK(std::isfinite(result.log[i].loss));
        CHECK(result.log[i].train_accuracy >= 0.0);
        CHECK(result.log[i].train_accuracy <= 1.0);
    }
    CHECK(result.log.back().loss < result.log.front().loss);
}

TEST_CASE("multiclass training uses the dataset class table") {
    TempDir dir;
    ScenarioSpec spec;
    spec.scenario = Scenario::feature_separable;
    spec.num_flows = 300;
    spec.num_endpoints = 60;
    spec.feature_dim = 3;
    spec.signal = 3.0;
    spec.seed = 5;
    spec.classes = {{"Benign", 0.6}, {"DoS", 0.25}, {"Recon", 0.15}};
    const auto path = dir.file("multi.csv");
    write_flow_csv(path.string(), generate(spec));

    auto config = quick_config();
    config.targets = TargetMode::multiclass;
    const auto dataset = encode_dataset(path, config).dataset;
    REQUIRE(dataset.class_names.size() == 3);

    const auto result = train_model(dataset, config);
    CHECK(result.model.class_names == dataset.class_names);
    CHECK(result.model.config.num_classes == 3);
    CHECK(result.model.targets == TargetMode::multiclass);
}

TEST_CASE("train_model rejects impossible target or weight setups") {
    TempDir dir;
    const auto path = dir.file("benign_only.csv");
    write_text(path, "IPV4_SRC_ADDR,L4_SRC_PORT,IPV4_DST_ADDR,L4_DST_PORT,f0,Label,Attack\n"
                     "10.0.0.1,80,10.0.0.2,443,1.0,0,Benign\n"
                     "10.0.0.3,81,10.0.0.2,443,2.0,0,Benign\n"
                     "10.0.0.4,82,10.0.0.2,443,3.0,0,Benign\n"
                     "10.0.0.5,83,10.0.0.2,443,4.0,0,Benign\n");
    auto config = quick_config();
    config.anonymize = false;
    config.targets = TargetMode::multiclass;
    const auto dataset = encode_dataset(path, config).dataset;
    REQUIRE(dataset.class_names.size() == 1);
    try {
        train_model(dataset, config);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("at least 2 classes") != std::string::npos);
    }

    TempDir dir2;
    const auto binary_path = write_corpus(dir2);
    auto weighted = quick_config();
    weighted.class_weights = {1.0, 2.0, 3.0};
    const auto binary_dataset = encode_dataset(binary_path, weighted).dataset;
    try {
        train_model(binary_dataset, weighted);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        const std::string what = e.what();
        CHECK(what.find("class_weights has 3 entries for 2 classes") != std::string::npos);
    }
}

TEST_CASE("loss_log_csv prints one row per epoch after the header") {
    CHECK(loss_log_csv({}) == "epoch,loss,train_accuracy\n");
    std::vector<EpochStats> log(2);
    log[0] = {0, 0.5, 0.75};
    log[1] = {1, 0.25, 1.0};
    const std::string csv = loss_log_csv(log);
    CHECK(csv == "epoch,loss,train_accuracy\n0,0.5,0.75\n1,0.25,1\n");
}

TEST_CASE("training twice from the same config is bit-identical") {
    TempDir dir;
    const auto path = write_corpus(dir);
    const auto config = quick_config();
    const auto dataset_a = encode_dataset(path, config).dataset;
    const auto dataset_b = encode_dataset(path, config).dataset;
    REQUIRE(dataset_a.records.size() == dataset_b.records.size());
    for (std::size_t i = 0; i < dataset_a.records.size(); ++i) {
        CHECK(dataset_a.records[i].features == dataset_b.records[i].features);
        CHECK(dataset_a.records[i].src_ip == dataset_b.records[i].src_ip);
    }
    CHECK(dataset_a.config_echo == dataset_b.config_echo);

    const auto run_a = train_model(dataset_a, config);
    const auto run_b = train_model(dataset_b, config);
    REQUIRE(run_a.model.params.layer_weights.size() ==
            run_b.model.params.layer_weights.size());
    for (std::size_t k = 0; k < run_a.model.params.layer_weights.size(); ++k) {
        CHECK(max_abs_diff(run_a.model.params.layer_weights[k],
                           run_b.model.params.layer_weights[k]) == 0.0);
    }
    CHECK(max_abs_diff(run_a.model.params.head, run_b.model.params.head) == 0.0);
    CHECK(loss_log_csv(run_a.log) == loss_log_csv(run_b.log));
}

TEST_CASE("zero epochs leaves the seeded initialization untouched") {
    TempDir dir;
    const auto path = write_corpus(dir);
    auto config = quick_config();
    config.epochs = 0;
    const auto dataset = encode_dataset(path, config).dataset;
    const auto result = train_model(dataset, config);
    CHECK(result.log.empty());
    CHECK(loss_log_csv(result.log) == "epoch,loss,train_accuracy\n");

    Rng rng(config.seed);
    const auto expected = init_params(config.model_config(2), 3, rng);
    REQUIRE(expected.layer_weights.size() == result.model.params.layer_weights.size());
    for (std::size_t k = 0; k < expected.layer_weights.size(); ++k) {
        CHECK(max_abs_diff(expected.layer_weights[k],
                           result.model.params.layer_weights[k]) == 0.0);
    }
    CHECK(max_abs_diff(expected.head, result.model.params.head) == 0.0);
}

TEST_CASE("evaluate_model reports the requested split and graph mode") {
    TempDir dir;
    const auto path = write_corpus(dir);
    auto config = quick_config();
    config.epochs = 10;
    const auto dataset = encode_dataset(path, config).dataset;
    const auto model = train_model(dataset, config).model;

    const auto test_eval = evaluate_model(dataset, model, config);
    const auto test_rows = dataset.indices(Assignment::test).size();
    CHECK(test_eval.text.find("Binary classification, test split (separate graph), " +
                              std::to_string(test_rows) + " flows") != std::string::npos);
    CHECK(test_eval.text.find("Accuracy") != std::string::npos);
    CHECK(test_eval.text.find("Confusion matrix (rows true, columns predicted)") !=
          std::string::npos);
    CHECK(test_eval.csv.rfind("class,dr,precision,f1,support,degenerate", 0) == 0);
    CHECK(test_eval.confusion.total() == static_cast<std::int64_t>(test_rows));

    auto train_config = config;
    train_config.eval_split = Assignment::train;
    const auto train_eval = evaluate_model(dataset, model, train_config);
    CHECK(train_eval.text.find("train split (separate graph)") != std::string::npos);

    auto joint_config = config;
    joint_config.joint_graph = true;
    const auto joint_eval = evaluate_model(dataset, model, joint_config);
    CHECK(joint_eval.text.find("test split (joint graph), " + std::to_string(test_rows) +
                               " flows") != std::string::npos);
    CHECK(joint_eval.confusion.total() == static_cast<std::int64_t>(test_rows));
}

TEST_CASE("an empty evaluation split is rejected") {
    TempDir dir;
    const auto path = write_corpus(dir);
    auto config = quick_config();
    config.train_fraction = 1.0;
    const auto dataset = encode_dataset(path, config).dataset;
    const auto model = train_model(dataset, config).model;
    CHECK_THROWS_AS(evaluate_model(dataset, model, config), SchemaError);
}

TEST_CASE("feature width mismatches name both dimensions") {
    TempDir dir;
    const auto path3 = write_corpus(dir, 300, 3);
    const auto path4 = write_corpus(dir, 300, 4);
    const auto config = quick_config();
    const auto dataset3 = encode_dataset(path3, config).dataset;
    const auto dataset4 = encode_dataset(path4, config).dataset;
    const auto model = train_model(dataset3, config).model;

    try {
        evaluate_model(dataset4, model, config);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string what = e.what();
        CHECK(what.find("model expects 3 feature dimensions") != std::string::npos);
        CHECK(what.find("dataset encodes 4") != std::string::npos);
    }
    CHECK_THROWS_AS(export_embeddings_csv(dataset4, model, config), DimensionError);
}

TEST_CASE("edge_targets maps graph classes into the model's table") {
    std::vector<FlowRecord> flows(3);
    for (std::size_t i = 0; i < flows.size(); ++i) {
        flows[i].src_ip = 0x0A000001u + static_cast<std::uint32_t>(i);
        flows[i].src_port = 1;
        flows[i].dst_ip = 0x0A0000FFu;
        flows[i].dst_port = 2;
        flows[i].features = {1.0};
        flows[i].flow_index = i;
    }
    flows[1].is_attack = true;
    flows[1].attack_class = "DoS";
    flows[2].is_attack = true;
    flows[2].attack_class = "DoS";
    flows[0].attack_class = "Benign";
    const auto graph = build_graph(flows, {"Benign", "DoS"});

    const auto binary = edge_targets(graph, TargetMode::binary, {"Benign", "Attack"});
    CHECK(binary == std::vector<std::uint16_t>{0, 1, 1});

    // The model orders classes differently than the graph.
    const auto multi = edge_targets(graph, TargetMode::multiclass, {"DoS", "Benign"});
    CHECK(multi == std::vector<std::uint16_t>{1, 0, 0});

    try {
        edge_targets(graph, TargetMode::multiclass, {"Benign", "Recon"});
        FAIL("expected ArtifactError");
    } catch (const ArtifactError& e) {
        const std::string what = e.what();
        CHECK(what.find("DoS") != std::string::npos);
        CHECK(what.find("not in the model's class table") != std::string::npos);
    }
}

TEST_CASE("predict_flows classifies a raw csv with the embedded schema") {
    TempDir dir;
    const auto path = write_corpus(dir);
    auto config = quick_config();
    config.epochs = 10;
    const auto dataset = encode_dataset(path, config).dataset;
    const auto model = train_model(dataset, config).model;

    const PredictResult result = predict_flows(path, model, config);
    CHECK(result.rows == 300);
    CHECK(result.row_errors.empty());
    REQUIRE(count_lines(result.csv) == 301);

    std::stringstream stream(result.csv);
    std::string header;
    std::getline(stream, header);
    CHECK(header ==
          "flow_index,src_ip,src_port,dst_ip,dst_port,predicted_class,"
          "log_prob_Benign,log_prob_Attack");

    std::string line;
    std::size_t checked = 0;
    while (std::getline(stream, line)) {
        const auto cells = split_cells(line);
        REQUIRE(cells.size() == 8);
        CHECK(cells[0] == std::to_string(checked));
        // Prediction never anonymizes, so the generator's addresses appear
        // verbatim.
        CHECK(cells[1].rfind("10.0.", 0) == 0);
        CHECK((cells[5] == "Benign" || cells[5] == "Attack"));
        const double benign = std::strtod(cells[6].c_str(), nullptr);
        const double attack = std::strtod(cells[7].c_str(), nullptr);
        CHECK(benign <= 0.0);
        CHECK(attack <= 0.0);
        CHECK(std::exp(benign) + std::exp(attack) == doctest::Approx(1.0).epsilon(1e-9));
        const std::string expected = benign >= attack ? "Benign" : "Attack";
        if (benign != attack) {
            CHECK(cells[5] == expected);
        }
        ++checked;
    }
    CHECK(checked == 300);
}

TEST_CASE("predict_flows accepts label-free csv files") {
    TempDir dir;
    const auto train_path = write_corpus(dir);
    const auto config = quick_config();
    const auto dataset = encode_dataset(train_path, config).dataset;
    const auto model = train_model(dataset, config).model;

    const auto unlabeled = dir.file("unlabeled.csv");
    write_text(unlabeled, "IPV4_SRC_ADDR,L4_SRC_PORT,IPV4_DST_ADDR,L4_DST_PORT,f0,f1,f2\n"
                          "192.168.1.9,4242,10.0.0.2,443,0.5,-0.25,1.5\n"
                          "192.168.1.9,4242,10.0.0.3,80,0.0,0.75,-1.0\n");
    const auto result = predict_flows(unlabeled, model, config);
    CHECK(result.rows == 2);
    CHECK(result.row_errors.empty());
    CHECK(result.csv.find("192.168.1.9,4242,10.0.0.2,443,") != std::string::npos);
    CHECK(count_lines(result.csv) == 3);
}

TEST_CASE("exported embeddings carry one row per evaluated flow") {
    TempDir dir;
    const auto path = write_corpus(dir);
    const auto config = quick_config();
    const auto dataset = encode_dataset(path, config).dataset;
    const auto model = train_model(dataset, config).model;

    const std::string csv = export_embeddings_csv(dataset, model, config);
    const auto test_indices = dataset.indices(Assignment::test);
    CHECK(count_lines(csv) == test_indices.size() + 1);

    std::stringstream stream(csv);
    std::string header;
    std::getline(stream, header);
    const auto header_cells = split_cells(header);
    // Two concatenated node embeddings of width hidden.
    REQUIRE(header_cells.size() == 1 + 2 * 8);
    CHECK(header_cells[0] == "flow_index");
    CHECK(header_cells[1] == "e0");
    CHECK(header_cells.back() == "e15");

    std::set<std::uint64_t> expected_indices;
    for (const std::size_t i : test_indices) {
        expected_indices.insert(dataset.records[i].flow_index);
    }
    std::string line;
    std::size_t rows = 0;
    while (std::getline(stream, line)) {
        const auto cells = split_cells(line);
        REQUIRE(cells.size() == 17);
        CHECK(expected_indices.count(std::strtoull(cells[0].c_str(), nullptr, 10)) == 1);
        ++rows;
    }
    CHECK(rows == test_indices.size());

    CHECK(export_embeddings_csv(dataset, model, config) == csv);
}

} // TEST_SUITE
