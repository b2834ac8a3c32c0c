// Serial reference kernels against their OpenMP counterparts.

#include "elab/cosmic/generator.hpp"
#include "elab/cosmic/kernels.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>

using namespace elab::cosmic;

namespace {

const Dataset& sample(std::int64_t triggers)
{
    static std::map<std::int64_t, Dataset> cache;
    auto it = cache.find(triggers);
    if (it == cache.end()) {
        GeneratorSpec spec;
        spec.trigger_count = triggers;
        spec.duration_s = static_cast<double>(triggers) / 10.0;
        spec.decay_fraction = 0.3;
        spec.background_rate_hz = 1;
        spec.seed = 17;
        it = cache.emplace(triggers, generate_synthetic(spec).datasets[0]).first;
    }
    return it->second;
}

std::vector<std::uint64_t> uniform_values(std::size_t n, std::uint64_t hi)
{
    std::mt19937_64 rng(3);
    std::vector<std::uint64_t> v(n);
    for (auto& x : v) x = std::uniform_int_distribution<std::uint64_t>(0, hi)(rng);
    return v;
}

template <auto Fn>
void decay_deltas_bench(benchmark::State& state)
{
    const auto& ds = sample(state.range(0));
    const auto triggers = find_triggers(ds.pulses, 2);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(ds.pulses, triggers, 100'000, true));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(triggers.size()));
}

template <auto Fn>
void histogram_bench(benchmark::State& state)
{
    const auto values = uniform_values(static_cast<std::size_t>(state.range(0)), 25'000);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(values, 20'000, 60));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bin_times_bench(benchmark::State& state)
{
    const auto times = uniform_values(static_cast<std::size_t>(state.range(0)), 3'600'000'000'000);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(times, 0, 60'000'000'000, 60));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(decay_deltas_bench<reference::decay_deltas>)->Name("decay_deltas/serial")->RangeMultiplier(10)->Range(1'000, 100'000);
BENCHMARK(decay_deltas_bench<decay_deltas>)->Name("decay_deltas/openmp")->RangeMultiplier(10)->Range(1'000, 100'000);
BENCHMARK(histogram_bench<reference::fill_histogram>)->Name("fill_histogram/serial")->RangeMultiplier(10)->Range(10'000, 1'000'000);
BENCHMARK(histogram_bench<fill_histogram>)->Name("fill_histogram/openmp")->RangeMultiplier(10)->Range(10'000, 1'000'000);
BENCHMARK(bin_times_bench<reference::bin_times>)->Name("bin_times/serial")->RangeMultiplier(10)->Range(10'000, 1'000'000);
BENCHMARK(bin_times_bench<bin_times>)->Name("bin_times/openmp")->RangeMultiplier(10)->Range(10'000, 1'000'000);

BENCHMARK_MAIN();
