// Serial reference paths against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "nids/model.hpp"
#include "nids/model_selection.hpp"
#include "nids/synth.hpp"

using namespace nids;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

const Dataset& data() {
    static const Dataset d = synth_separable(2000, 30, 0.2, 1);
    return d;
}

void knn_neighbors(benchmark::State& state) {
    const auto m = train_knn(data(), KNNParams{4, true});
    const auto q = data().row(17);
    for (auto _ : state) benchmark::DoNotOptimize(m.neighbors(q, exec_of(state)));
}

void predict_batch_knn(benchmark::State& state) {
    const auto m = train_model(Algorithm::KNN, data(), complete_params(Algorithm::KNN, {{"K", 4}}), 1);
    const auto [train, queries] = stratified_split(data(), 0.9, 1);
    for (auto _ : state) benchmark::DoNotOptimize(predict_batch(m, queries, exec_of(state)));
}

void forest_training(benchmark::State& state) {
    const auto p = complete_params(Algorithm::RF, {{"I", 20}});
    for (auto _ : state) benchmark::DoNotOptimize(train_model(Algorithm::RF, data(), p, 1, exec_of(state)));
}

void grid_search_dt(benchmark::State& state) {
    const auto [train, validation] = stratified_split(data(), 0.7, 1);
    const GridSpec g{Algorithm::DT, {{"C", 0.1, 0.5, 5}, {"M", 1, 20, 4, true}}};
    for (auto _ : state) benchmark::DoNotOptimize(grid_search(g, train, validation, 1, exec_of(state)));
}

}  // namespace

// argument 0 is the serial path, 1 the parallel one
BENCHMARK(knn_neighbors)->Arg(0)->Arg(1);
BENCHMARK(predict_batch_knn)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(forest_training)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(grid_search_dt)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
