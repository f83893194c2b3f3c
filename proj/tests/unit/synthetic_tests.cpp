#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"

#include "egsage/csv.hpp"
#include "egsage/errors.hpp"
#include "egsage/synthetic.hpp"
#include "helpers.hpp"

using namespace egsage;
using egsage::testing::TempDir;
using egsage::testing::read_bytes;

namespace {

constexpr std::uint32_t kEndpointBase = 0x0A000001u;

auto source_index(const FlowRecord& record) -> std::size_t {
    return record.src_ip - kEndpointBase;
}

auto feature_matrix(std::span<const FlowRecord> records) -> Matrix {
    Matrix out(records.size(), records.empty() ? 0 : records.front().features.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (std::size_t c = 0; c < records[r].features.size(); ++c) {
            out(r, c) = records[r].features[c];
        }
    }
    return out;
}

auto binary_labels(std::span<const FlowRecord> records) -> std::vector<std::uint16_t> {
    std::vector<std::uint16_t> labels;
    labels.reserve(records.size());
    for (const FlowRecord& record : records) {
        labels.push_back(record.is_attack ? 1 : 0);
    }
    return labels;
}

} // namespace

TEST_SUITE("synthetic") {

TEST_CASE("generation is deterministic in the spec") {
    ScenarioSpec spec;
    spec.num_flows = 500;
    spec.num_endpoints = 100;
    spec.seed = 4;
    const auto a = generate(spec);
    const auto b = generate(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].src_ip == b[i].src_ip);
        CHECK(a[i].dst_ip == b[i].dst_ip);
        CHECK(a[i].src_port == b[i].src_port);
        CHECK(a[i].dst_port == b[i].dst_port);
        CHECK(a[i].is_attack == b[i].is_attack);
        CHECK(a[i].attack_class == b[i].attack_class);
        CHECK(a[i].features == b[i].features);
        CHECK(a[i].flow_index == i);
    }

    ScenarioSpec other = spec;
    other.seed = 5;
    const auto c = generate(other);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.size() && !any_difference; ++i) {
        any_difference = a[i].features != c[i].features || a[i].src_ip != c[i].src_ip;
    }
    CHECK(any_difference);
}

TEST_CASE("written flow CSVs are byte-identical and parse back losslessly") {
    ScenarioSpec spec;
    spec.num_flows = 300;
    spec.num_endpoints = 80;
    spec.seed = 12;
    const auto records = generate(spec);

    TempDir dir;
    const auto path_a = dir.file("a.csv");
    const auto path_b = dir.file("b.csv");
    write_flow_csv(path_a.string(), records, "scenario=feature_separable seed=12");
    write_flow_csv(path_b.string(), records, "scenario=feature_separable seed=12");
    CHECK(read_bytes(path_a) == read_bytes(path_b));

    const ParseResult parsed = parse_csv(path_a);
    CHECK(parsed.row_errors.empty());
    CHECK(parsed.comment_lines == 1);
    REQUIRE(parsed.records.size() == records.size());
    REQUIRE(parsed.feature_columns.size() == spec.feature_dim);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RawRecord& raw = parsed.records[i];
        CHECK(raw.src_ip == records[i].src_ip);
        CHECK(raw.dst_ip == records[i].dst_ip);
        CHECK(raw.src_port == records[i].src_port);
        CHECK(raw.dst_port == records[i].dst_port);
        CHECK(raw.is_attack == records[i].is_attack);
        CHECK(raw.attack_class == records[i].attack_class);
        CHECK(raw.flow_index == records[i].flow_index);
        // %.17g output round-trips every double bit-exactly.
        for (std::size_t c = 0; c < spec.feature_dim; ++c) {
            CHECK(std::strtod(raw.cells[c].c_str(), nullptr) == records[i].features[c]);
        }
    }
}

TEST_CASE("feature_separable puts class means a signal apart") {
    ScenarioSpec spec;
    spec.scenario = Scenario::feature_separable;
    spec.num_flows = 10000;
    spec.num_endpoints = 2000;
    spec.feature_dim = 4;
    spec.signal = 2.0;
    spec.classes = {{"Benign", 0.5}, {"Attack", 0.5}};
    spec.seed = 3;
    const auto records = generate(spec);

    std::vector<double> benign_mean(4, 0.0);
    std::vector<double> attack_mean(4, 0.0);
    std::size_t benign_count = 0;
    std::size_t attack_count = 0;
    for (const FlowRecord& record : records) {
        auto& mean = record.is_attack ? attack_mean : benign_mean;
        for (std::size_t c = 0; c < 4; ++c) {
            mean[c] += record.features[c];
        }
        (record.is_attack ? attack_count : benign_count) += 1;
    }
    // Counts stay near the binomial expectation.
    CHECK(benign_count > 4800);
    CHECK(benign_count < 5200);
    for (std::size_t c = 0; c < 4; ++c) {
        benign_mean[c] /= static_cast<double>(benign_count);
        attack_mean[c] /= static_cast<double>(attack_count);
        // Class 1 sits at signal / sqrt(dim) = 1.0 along every coordinate.
        CHECK(std::abs(benign_mean[c]) < 0.05);
        CHECK(std::abs(attack_mean[c] - 1.0) < 0.05);
    }
}

TEST_CASE("topology_only attack flows originate from the attacker blocks") {
    ScenarioSpec spec;
    spec.scenario = Scenario::topology_only;
    spec.num_flows = 4000;
    spec.num_endpoints = 1000;
    spec.feature_dim = 3;
    spec.classes = {{"Benign", 0.6}, {"DoS", 0.2}, {"Recon", 0.2}};
    spec.seed = 8;
    const auto records = generate(spec);

    // 1 percent of 1000 endpoints gives 10 attackers per attack class.
    const std::size_t attackers_per_class = 10;
    for (const FlowRecord& record : records) {
        const std::size_t source = source_index(record);
        if (record.attack_class == "DoS") {
            CHECK(source < attackers_per_class);
        } else if (record.attack_class == "Recon") {
            CHECK(source >= attackers_per_class);
            CHECK(source < 2 * attackers_per_class);
        } else {
            CHECK(source >= 2 * attackers_per_class);
            CHECK(source < spec.num_endpoints);
        }
    }
}

TEST_CASE("topology_only flows from one source share its signature") {
    ScenarioSpec spec;
    spec.scenario = Scenario::topology_only;
    spec.num_flows = 6000;
    spec.num_endpoints = 300;
    spec.feature_dim = 3;
    spec.classes = {{"Benign", 0.5}, {"Attack", 0.5}};
    spec.seed = 9;
    const auto records = generate(spec);

    // Gather the flows of the first attacker endpoint (index 0).
    std::vector<const FlowRecord*> own;
    for (const FlowRecord& record : records) {
        if (source_index(record) == 0 && record.is_attack) {
            own.push_back(&record);
        }
    }
    REQUIRE(own.size() > 200);
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (const FlowRecord* record : own) {
            mean += record->features[c];
        }
        mean /= static_cast<double>(own.size());
        double variance = 0.0;
        for (const FlowRecord* record : own) {
            const double centered = record->features[c] - mean;
            variance += centered * centered;
        }
        variance /= static_cast<double>(own.size());
        // Within one source only the noise varies (sigma 0.4, variance 0.16).
        CHECK(variance > 0.10);
        CHECK(variance < 0.25);
    }
}

TEST_CASE("mixed keeps the feature signal on top of signatures") {
    ScenarioSpec spec;
    spec.scenario = Scenario::mixed;
    spec.num_flows = 8000;
    spec.num_endpoints = 2000;
    spec.feature_dim = 4;
    spec.signal = 2.0;
    spec.classes = {{"Benign", 0.5}, {"Attack", 0.5}};
    spec.seed = 11;
    const auto records = generate(spec);

    double benign_mean = 0.0;
    double attack_mean = 0.0;
    std::size_t benign_count = 0;
    std::size_t attack_count = 0;
    for (const FlowRecord& record : records) {
        double row = 0.0;
        for (const double x : record.features) {
            row += x;
        }
        row /= static_cast<double>(spec.feature_dim);
        if (record.is_attack) {
            attack_mean += row;
            ++attack_count;
        } else {
            benign_mean += row;
            ++benign_count;
        }
        // Attack sources still come from the attacker block.
        if (record.is_attack) {
            CHECK(source_index(record) < 20);
        }
    }
    benign_mean /= static_cast<double>(benign_count);
    attack_mean /= static_cast<double>(attack_count);
    CHECK(attack_mean - benign_mean > 0.5);
    CHECK(attack_mean - benign_mean < 1.5);
}

TEST_CASE("class counts follow the priors") {
    ScenarioSpec spec;
    spec.num_flows = 20000;
    spec.num_endpoints = 500;
    spec.classes = {{"Benign", 0.7}, {"DoS", 0.2}, {"Theft", 0.1}};
    spec.seed = 2;
    const auto records = generate(spec);

    std::map<std::string, std::size_t> counts;
    for (const FlowRecord& record : records) {
        counts[record.attack_class] += 1;
    }
    CHECK(counts["Benign"] > 13700);
    CHECK(counts["Benign"] < 14300);
    CHECK(counts["DoS"] > 3700);
    CHECK(counts["DoS"] < 4300);
    CHECK(counts["Theft"] > 1700);
    CHECK(counts["Theft"] < 2300);
}

TEST_CASE("invalid scenario specs are rejected") {
    ScenarioSpec spec;

    ScenarioSpec one_class = spec;
    one_class.classes = {{"Benign", 1.0}};
    CHECK_THROWS_AS(generate(one_class), SchemaError);

    ScenarioSpec bad_priors = spec;
    bad_priors.classes = {{"Benign", 0.5}, {"Attack", 0.2}};
    CHECK_THROWS_AS(generate(bad_priors), SchemaError);

    ScenarioSpec negative_prior = spec;
    negative_prior.classes = {{"Benign", 1.5}, {"Attack", -0.5}};
    CHECK_THROWS_AS(generate(negative_prior), SchemaError);

    ScenarioSpec zero_flows = spec;
    zero_flows.num_flows = 0;
    CHECK_THROWS_AS(generate(zero_flows), SchemaError);

    ScenarioSpec zero_endpoints = spec;
    zero_endpoints.num_endpoints = 0;
    CHECK_THROWS_AS(generate(zero_endpoints), SchemaError);

    ScenarioSpec zero_dim = spec;
    zero_dim.feature_dim = 0;
    CHECK_THROWS_AS(generate(zero_dim), SchemaError);

    // Attacker blocks must leave ordinary endpoints over.
    ScenarioSpec crowded = spec;
    crowded.scenario = Scenario::topology_only;
    crowded.num_endpoints = 2;
    crowded.classes = {{"Benign", 0.5}, {"DoS", 0.25}, {"Recon", 0.25}};
    CHECK_THROWS_AS(generate(crowded), SchemaError);
}

TEST_CASE("the baseline separates feature-visible classes") {
    ScenarioSpec spec;
    spec.scenario = Scenario::feature_separable;
    spec.num_flows = 2000;
    spec.num_endpoints = 400;
    spec.feature_dim = 4;
    spec.signal = 3.0;
    spec.classes = {{"Benign", 0.5}, {"Attack", 0.5}};
    spec.seed = 6;
    const auto records = generate(spec);
    const Matrix features = feature_matrix(records);
    const auto labels = binary_labels(records);

    BaselineTrainConfig config;
    config.max_epochs = 400;
    const BaselineModel model = train_baseline(features, labels, 2, config);
    const auto predictions = baseline_predict(model, features);

    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        correct += predictions[i] == labels[i] ? 1 : 0;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(labels.size()) >= 0.95);

    // Log probs agree with the argmax predictions.
    const Matrix log_probs = baseline_log_probs(model, features);
    REQUIRE(log_probs.rows() == features.rows());
    for (std::size_t r = 0; r < 50; ++r) {
        const std::size_t best = log_probs(r, 1) > log_probs(r, 0) ? 1 : 0;
        CHECK(predictions[r] == best);
    }
}

TEST_CASE("the baseline cannot read class-blind features") {
    ScenarioSpec spec;
    spec.scenario = Scenario::topology_only;
    spec.num_flows = 4000;
    spec.num_endpoints = 400;
    spec.feature_dim = 4;
    spec.classes = {{"Benign", 0.8}, {"Attack", 0.2}};
    spec.seed = 5;
    const auto records = generate(spec);
    const Matrix features = feature_matrix(records);
    const auto labels = binary_labels(records);

    BaselineTrainConfig config;
    config.max_epochs = 400;
    const BaselineModel model = train_baseline(features, labels, 2, config);
    const auto predictions = baseline_predict(model, features);

    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        tp += labels[i] == 1 && predictions[i] == 1 ? 1 : 0;
        fp += labels[i] == 0 && predictions[i] == 1 ? 1 : 0;
        fn += labels[i] == 1 && predictions[i] == 0 ? 1 : 0;
    }
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    CHECK(f1 <= 0.70);
}

TEST_CASE("baseline training rejects inconsistent input") {
    CHECK_THROWS_AS(train_baseline(Matrix(0, 3), std::vector<std::uint16_t>{}, 2), StateError);
    const Matrix features(4, 2);
    const std::vector<std::uint16_t> labels{0, 1};
    CHECK_THROWS_AS(train_baseline(features, labels, 2), DimensionError);
}

} // TEST_SUITE
