// Microbenchmarks for the numeric kernels and the full eval-mode forward
// pass. Run with --benchmark_filter to select a subset.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "egsage/graph.hpp"
#include "egsage/matrix.hpp"
#include "egsage/model.hpp"
#include "egsage/rng.hpp"
#include "egsage/synthetic.hpp"

namespace {

using namespace egsage;

auto random_matrix(std::size_t rows, std::size_t cols, Rng& rng) -> Matrix {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.uniform(-1.0, 1.0);
    }
    return m;
}

auto synthetic_graph(std::size_t flows, std::size_t endpoints) -> FlowGraph {
    ScenarioSpec spec;
    spec.scenario = Scenario::topology_only;
    spec.num_flows = flows;
    spec.num_endpoints = endpoints;
    spec.feature_dim = 4;
    spec.seed = 1;
    const auto records = generate(spec);
    return build_graph(records, {"Benign", "Attack"});
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    const Matrix a = random_matrix(n, n, rng);
    const Matrix b = random_matrix(n, n, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(a, b));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_MatmulTransposedWeights(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    const Matrix h = random_matrix(4 * n, 2 * n, rng);
    const Matrix w = random_matrix(n, 2 * n, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(h, w, false, true));
    }
}
BENCHMARK(BM_MatmulTransposedWeights)->Arg(32)->Arg(128);

void BM_AggregateNeighborhood(benchmark::State& state) {
    const auto flows = static_cast<std::size_t>(state.range(0));
    const auto graph = synthetic_graph(flows, flows / 10);
    Rng rng(4);
    const Matrix messages = random_matrix(graph.num_edges(), 8, rng);
    for (auto _ : state) {
        for (std::size_t v = 0; v < graph.num_nodes(); ++v) {
            benchmark::DoNotOptimize(aggregate_neighborhood(graph, v, messages));
        }
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(graph.num_nodes()));
}
BENCHMARK(BM_AggregateNeighborhood)->Arg(1000)->Arg(10000);

void BM_EvalForward(benchmark::State& state) {
    const auto flows = static_cast<std::size_t>(state.range(0));
    const auto hidden = static_cast<std::size_t>(state.range(1));
    const auto graph = synthetic_graph(flows, flows / 10);
    ModelConfig config;
    config.hidden = hidden;
    config.dropout_rate = 0.0;
    Rng rng(5);
    const ModelParams params = init_params(config, graph.feature_dim, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(graph, params, config, Mode::eval));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(graph.num_edges()));
    state.counters["flows"] = static_cast<double>(graph.num_edges());
}
BENCHMARK(BM_EvalForward)
    ->Args({1000, 32})
    ->Args({10000, 32})
    ->Args({10000, 128})
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
