// Microbenchmarks: lookup latency per index kind, build time with a warm
// pool vs. training from scratch, and the similarity primitives.

#include <benchmark/benchmark.h>

#include <random>

#include "reidx/index.hpp"
#include "reidx/pool.hpp"
#include "reidx/workload.hpp"

namespace {

using namespace reidx;

Keys make_data(std::size_t n, unsigned alpha = 1, std::uint64_t seed = 7) {
    return gen_keys(alpha > 1 ? DataKind::skew : DataKind::uniform, alpha, n,
                    seed);
}

Keys make_probes(const Keys& data, std::size_t count) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    Keys probes(count);
    for (auto& k : probes) k = data[pick(rng)];
    return probes;
}

template <typename Index>
void run_lookups(benchmark::State& state, const Index& idx, const Keys& probes) {
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(idx.lookup(probes[i]));
        if (++i == probes.size()) i = 0;
    }
    state.SetItemsProcessed(state.iterations());
}

void BM_LookupRmrt(benchmark::State& state) {
    const auto data = make_data(static_cast<std::size_t>(state.range(0)));
    ModelPool pool = pretrain_pool(0.8, ModelKind::linear, 100, 1);
    RmrtIndex idx(data, 10000, 16, &pool, {});
    run_lookups(state, idx, make_probes(data, 1 << 16));
}

void BM_LookupRmi(benchmark::State& state) {
    const auto data = make_data(static_cast<std::size_t>(state.range(0)));
    IndexConfig cfg;
    cfg.reuse = false;
    RmiIndex idx(data, 256, nullptr, cfg);
    run_lookups(state, idx, make_probes(data, 1 << 16));
}

void BM_LookupBinarySearch(benchmark::State& state) {
    const auto data = make_data(static_cast<std::size_t>(state.range(0)));
    BinarySearchIndex idx(data);
    run_lookups(state, idx, make_probes(data, 1 << 16));
}

void BM_BuildWarmPool(benchmark::State& state) {
    const auto data = make_data(static_cast<std::size_t>(state.range(0)), 3);
    const ModelPool warm = pretrain_pool(0.8, ModelKind::linear, 100, 1);
    for (auto _ : state) {
        ModelPool pool = warm;
        RmrtIndex idx(data, 10000, 16, &pool, {});
        benchmark::DoNotOptimize(idx.stats().reuse_rate);
    }
}

void BM_BuildColdPool(benchmark::State& state) {
    const auto data = make_data(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) {
        ModelPool pool(ModelKind::linear, 0.8, default_bin_count(0.8), 100);
        RmrtIndex idx(data, 10000, 16, &pool, {});
        benchmark::DoNotOptimize(idx.stats().reuse_rate);
    }
}

void BM_HistogramDistance(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto a = build_histogram(make_data(4096, 1, 3), m);
    const auto b = build_histogram(make_data(4096, 3, 4), m);
    for (auto _ : state) benchmark::DoNotOptimize(histogram_distance(a, b));
}

void BM_KsDistance(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = make_data(n, 1, 3);
    const auto b = make_data(n, 3, 4);
    for (auto _ : state) benchmark::DoNotOptimize(ks_distance(a, b));
}

BENCHMARK(BM_LookupRmrt)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_LookupRmi)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_LookupBinarySearch)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_BuildWarmPool)->Arg(1 << 18)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildColdPool)->Arg(1 << 18)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HistogramDistance)->Arg(10)->Arg(64);
BENCHMARK(BM_KsDistance)->Arg(1 << 12)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
