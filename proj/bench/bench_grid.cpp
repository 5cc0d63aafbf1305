// Compares the OpenMP grid-moment sweep against the serial reference at a
// few grid resolutions. Run with --benchmark_min_time=... as usual.

#include <benchmark/benchmark.h>

#include "htsr/reconcile.hpp"

using namespace htsr;

namespace {

void bench_serial(benchmark::State& state) {
    BaseForecasts f = random_linear_instance(1, 2);
    Hierarchy h = Hierarchy::from_groups({{0, 1}}, 2);
    int points = static_cast<int>(state.range(0));
    for (auto _ : state) {
        GridMoments m = grid_posterior_moments_serial(f, h, 6.0, points);
        benchmark::DoNotOptimize(m.mean);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points) * points);
}

void bench_parallel(benchmark::State& state) {
    BaseForecasts f = random_linear_instance(1, 2);
    Hierarchy h = Hierarchy::from_groups({{0, 1}}, 2);
    int points = static_cast<int>(state.range(0));
    for (auto _ : state) {
        GridMoments m = grid_posterior_moments(f, h, 6.0, points);
        benchmark::DoNotOptimize(m.mean);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points) * points);
}

void bench_serial_3d(benchmark::State& state) {
    BaseForecasts f = random_linear_instance(2, 3);
    Hierarchy h = Hierarchy::from_groups({{0, 1, 2}}, 3);
    for (auto _ : state) {
        GridMoments m = grid_posterior_moments_serial(f, h, 6.0, 101);
        benchmark::DoNotOptimize(m.mean);
    }
}

void bench_parallel_3d(benchmark::State& state) {
    BaseForecasts f = random_linear_instance(2, 3);
    Hierarchy h = Hierarchy::from_groups({{0, 1, 2}}, 3);
    for (auto _ : state) {
        GridMoments m = grid_posterior_moments(f, h, 6.0, 101);
        benchmark::DoNotOptimize(m.mean);
    }
}

}  // namespace

BENCHMARK(bench_serial)->Arg(201)->Arg(401)->Arg(801);
BENCHMARK(bench_parallel)->Arg(201)->Arg(401)->Arg(801);
BENCHMARK(bench_serial_3d);
BENCHMARK(bench_parallel_3d);

BENCHMARK_MAIN();
