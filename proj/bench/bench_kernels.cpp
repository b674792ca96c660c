#include <benchmark/benchmark.h>
#include <omp.h>

#include "rarepath/baseline.hpp"
#include "rarepath/last_particle.hpp"
#include "rarepath/model_1d.hpp"
#include "rarepath/model_2d.hpp"

using namespace rarepath;

namespace {

const Model1D& model_1d()
{
    static const Model1D m({-10, 1, 1, 0, 0}, {0.01, 0});
    return m;
}

const Model2D& model_2d()
{
    static const Model2D m({}, {});
    return m;
}

template <class M>
void bm_mc_serial(benchmark::State& state, const M& model)
{
    const auto J = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simple_mc_serial(model, J, 0.0, StreamKey(1)).successes);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(J));
}

template <class M>
void bm_mc_parallel(benchmark::State& state, const M& model)
{
    const auto J = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simple_mc(model, J, 0.0, StreamKey(1)).successes);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(J));
    state.counters["threads"] = omp_get_max_threads();
}

void BM_mc_serial_1d(benchmark::State& s) { bm_mc_serial(s, model_1d()); }
void BM_mc_parallel_1d(benchmark::State& s) { bm_mc_parallel(s, model_1d()); }
void BM_mc_serial_2d(benchmark::State& s) { bm_mc_serial(s, model_2d()); }
void BM_mc_parallel_2d(benchmark::State& s) { bm_mc_parallel(s, model_2d()); }

template <class M>
void bm_hm(benchmark::State& state, const M& model)
{
    Rng rng(3);
    Trajectory x = model.sample(rng);
    const double t = model.objective(x);
    const int T = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(hm_conditional_sample(model, t, x, T, rng).acceptance_rate);
    state.SetItemsProcessed(state.iterations() * T);
}

void BM_hm_1d(benchmark::State& s) { bm_hm(s, model_1d()); }
void BM_hm_2d(benchmark::State& s) { bm_hm(s, model_2d()); }

} // namespace

BENCHMARK(BM_mc_serial_1d)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_parallel_1d)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_serial_2d)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_parallel_2d)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_hm_1d)->Arg(300)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_hm_2d)->Arg(300)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
