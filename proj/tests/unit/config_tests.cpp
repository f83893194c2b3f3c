#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"

#include "egsage/config.hpp"
#include "egsage/errors.hpp"
#include "helpers.hpp"

using namespace egsage;
using egsage::testing::TempDir;
using egsage::testing::write_text;

namespace {

// Round-trips a config through its echo text via the file parser.
auto reparse(const RunConfig& config) -> RunConfig {
    TempDir dir;
    const auto path = dir.file("echo.conf");
    write_text(path, config.echo());
    RunConfig fresh;
    apply_config_file(fresh, path);
    return fresh;
}

struct EnvGuard {
    std::string name;
    std::string old_value;
    bool was_set = false;

    explicit EnvGuard(const char* variable) : name(variable) {
        const char* current = std::getenv(variable);
        was_set = current != nullptr;
        if (was_set) {
            old_value = current;
        }
    }
    ~EnvGuard() {
        if (was_set) {
            ::setenv(name.c_str(), old_value.c_str(), 1);
        } else {
            ::unsetenv(name.c_str());
        }
    }
};

} // namespace

TEST_SUITE("config") {

TEST_CASE("echo round-trips the defaults") {
    const RunConfig defaults;
    const RunConfig back = reparse(defaults);
    CHECK(back.echo() == defaults.echo());
}

TEST_CASE("echo round-trips a fully customized configuration") {
    RunConfig config;
    config.seed = 987654321;
    config.train_fraction = 0.65;
    config.subsample_fraction = 0.125;
    config.stratified = false;
    config.anonymize = false;
    config.benign_class = "Normal";
    config.categorical_mode = CategoricalMode::drop;
    config.max_categories = 7;
    config.columns.src_ip = "SRC";
    config.columns.src_port = "SPT";
    config.columns.dst_ip = "DST";
    config.columns.dst_port = "DPT";
    config.columns.label = "y";
    config.columns.attack_class = "family";
    config.layers = 3;
    config.hidden = 48;
    config.dropout = 0.35;
    config.neighbor_sample_size = 12;
    config.neighbor_source = NeighborSource::node_embeddings;
    config.targets = TargetMode::multiclass;
    config.learning_rate = 0.0025;
    config.beta1 = 0.85;
    config.beta2 = 0.95;
    config.epsilon = 1e-9;
    config.epochs = 37;
    config.class_weights = {1.0, 2.5, 0.125};
    config.eval_split = Assignment::train;
    config.joint_graph = true;

    const RunConfig back = reparse(config);
    CHECK(back.echo() == config.echo());
    CHECK(back.seed == config.seed);
    CHECK(back.neighbor_sample_size == 12);
    CHECK(back.class_weights == config.class_weights);
    CHECK(back.targets == TargetMode::multiclass);
    CHECK(back.eval_split == Assignment::train);
    CHECK(back.columns.attack_class == "family");
}

TEST_CASE("the full neighborhood echoes as the word full") {
    RunConfig config;
    CHECK(config.echo().find("neighbor_sample_size = full") != std::string::npos);
    const RunConfig back = reparse(config);
    CHECK(back.neighbor_sample_size == kFullNeighborhood);
}

TEST_CASE("unknown keys and unparseable values are schema errors") {
    RunConfig config;
    CHECK_THROWS_AS(apply_config_value(config, "not_a_key", "1"), SchemaError);
    CHECK_THROWS_AS(apply_config_value(config, "seed", "twelve"), SchemaError);
    CHECK_THROWS_AS(apply_config_value(config, "seed", "-3"), SchemaError);
    CHECK_THROWS_AS(apply_config_value(config, "train_fraction", "0.5x"), SchemaError);
    CHECK_THROWS_AS(apply_config_value(config, "stratified", "yes"), SchemaError);
    CHECK_THROWS_AS(apply_config_value(config, "categorical_mode", "onehot"), SchemaError);
    CHECK_THROWS_AS(apply_config_value(config, "neighbor_source", "edges"), SchemaError);
    CHECK_THROWS_AS(apply_config_value(config, "targets", "both"), SchemaError);
    CHECK_THROWS_AS(apply_config_value(config, "eval_split", "validation"), SchemaError);
    CHECK_THROWS_AS(apply_config_value(config, "class_weights", "1.0,abc"), SchemaError);

    try {
        apply_config_value(config, "epochs", "many");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("epochs") != std::string::npos);
        CHECK(std::string(e.what()).find("many") != std::string::npos);
    }
}

TEST_CASE("config files tolerate comments and whitespace") {
    TempDir dir;
    const auto path = dir.file("run.conf");
    write_text(path, "# full line comment\n"
                     "  seed = 9   # trailing comment\n"
                     "\n"
                     "hidden=64\n"
                     "  epochs   =   3  \n"
                     "seed = 11\n");
    const auto entries = parse_config_file(path);
    REQUIRE(entries.size() == 4);
    CHECK(entries[0] == std::pair<std::string, std::string>{"seed", "9"});
    CHECK(entries[1] == std::pair<std::string, std::string>{"hidden", "64"});

    RunConfig config;
    apply_config_file(config, path);
    // Later lines override earlier ones.
    CHECK(config.seed == 11);
    CHECK(config.hidden == 64);
    CHECK(config.epochs == 3);
}

TEST_CASE("malformed config files name the offending line") {
    TempDir dir;
    const auto path = dir.file("broken.conf");
    write_text(path, "seed = 1\nno equals sign here\n");
    try {
        parse_config_file(path);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    const auto empty_key = dir.file("empty_key.conf");
    write_text(empty_key, "= 5\n");
    CHECK_THROWS_AS(parse_config_file(empty_key), SchemaError);

    CHECK_THROWS_AS(parse_config_file(dir.file("missing.conf")), FileError);
}

TEST_CASE("the seed environment variable applies only when set") {
    EnvGuard guard("EGS_SEED");

    ::unsetenv("EGS_SEED");
    RunConfig untouched;
    untouched.seed = 42;
    apply_env_seed(untouched);
    CHECK(untouched.seed == 42);

    ::setenv("EGS_SEED", "123", 1);
    RunConfig from_env;
    apply_env_seed(from_env);
    CHECK(from_env.seed == 123);

    ::setenv("EGS_SEED", "abc", 1);
    RunConfig bad;
    CHECK_THROWS_AS(apply_env_seed(bad), SchemaError);

    ::setenv("EGS_SEED", "", 1);
    RunConfig empty;
    empty.seed = 7;
    apply_env_seed(empty);
    CHECK(empty.seed == 7);
}

TEST_CASE("precedence runs default, environment, file, explicit flag") {
    EnvGuard guard("EGS_SEED");
    ::setenv("EGS_SEED", "5", 1);
    TempDir dir;
    const auto path = dir.file("run.conf");
    write_text(path, "seed = 6\n");

    RunConfig env_only;
    apply_env_seed(env_only);
    CHECK(env_only.seed == 5);

    RunConfig with_file;
    apply_env_seed(with_file);
    apply_config_file(with_file, path);
    CHECK(with_file.seed == 6);

    RunConfig with_flag;
    apply_env_seed(with_flag);
    apply_config_file(with_flag, path);
    apply_config_value(with_flag, "seed", "7");
    CHECK(with_flag.seed == 7);
}

TEST_CASE("format_double is shortest and round-trips exactly") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(0.7) == "0.7");
    CHECK(format_double(1e-08) == "1e-08");
    CHECK(format_double(-2.5) == "-2.5");
    const std::vector<double> values{0.1,  1.0 / 3.0,     0.7,        1e-8, 1e300,
                                     -2.5e-15, 123456789.125, 0.30000000000000004};
    for (const double value : values) {
        const std::string text = format_double(value);
        CHECK(std::strtod(text.c_str(), nullptr) == value);
    }
}

TEST_CASE("derived model and train configs carry the knobs over") {
    RunConfig config;
    config.layers = 3;
    config.hidden = 24;
    config.dropout = 0.1;
    config.neighbor_sample_size = 9;
    config.neighbor_source = NeighborSource::node_embeddings;
    config.learning_rate = 0.004;
    config.beta1 = 0.8;
    config.beta2 = 0.9;
    config.epsilon = 1e-7;
    config.epochs = 13;
    config.seed = 21;
    config.class_weights = {2.0, 1.0};

    const ModelConfig model = config.model_config(4);
    CHECK(model.layers == 3);
    CHECK(model.hidden == 24);
    CHECK(model.dropout_rate == 0.1);
    CHECK(model.num_classes == 4);
    CHECK(model.neighbor_sample_size == 9);
    CHECK(model.neighbor_source == NeighborSource::node_embeddings);

    const TrainConfig train = config.train_config();
    CHECK(train.learning_rate == 0.004);
    CHECK(train.beta1 == 0.8);
    CHECK(train.beta2 == 0.9);
    CHECK(train.epsilon == 1e-7);
    CHECK(train.epochs == 13);
    CHECK(train.seed == 21);
    CHECK(train.class_weights == std::vector<double>{2.0, 1.0});
}

} // TEST_SUITE
