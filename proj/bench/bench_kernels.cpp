#include "fhr/batch.hpp"
#include "fhr/dgp.hpp"
#include "fhr/estimate.hpp"
#include "fhr/moments.hpp"

#include <benchmark/benchmark.h>

namespace {

using fhr::Exec;

constexpr std::size_t kUnits = 200000;

const fhr::Panel& bench_panel() {
    static const fhr::Panel p = fhr::simulate_panel(fhr::DgpConfig::experiment('B'), kUnits, 7);
    return p;
}

fhr::MomentOptions bench_options() {
    fhr::MomentOptions mo;
    mo.post = fhr::ExperimentPosterior::from(fhr::DgpConfig::experiment('B'));
    return mo;
}

void BM_simulate_panel(benchmark::State& state, Exec exec) {
    const fhr::DgpConfig cfg = fhr::DgpConfig::experiment('B');
    for (auto _ : state) benchmark::DoNotOptimize(fhr::simulate_panel(cfg, kUnits, 7, exec));
    state.SetItemsProcessed(state.iterations() * kUnits);
}

void BM_moment_mean(benchmark::State& state, const char* id, Exec exec) {
    const fhr::MomentFn phi = fhr::make_moment(id, bench_options());
    const fhr::Panel& p = bench_panel();
    for (auto _ : state) benchmark::DoNotOptimize(fhr::moment_mean(phi, p, fhr::theta0(), exec));
    state.SetItemsProcessed(state.iterations() * kUnits);
}

void BM_moment_stats(benchmark::State& state, const char* id, Exec exec) {
    const fhr::MomentFn phi = fhr::make_moment(id, bench_options());
    const fhr::Panel& p = bench_panel();
    for (auto _ : state) benchmark::DoNotOptimize(fhr::moment_stats(phi, p, fhr::theta0(), exec));
    state.SetItemsProcessed(state.iterations() * kUnits);
}

void BM_jacobian(benchmark::State& state, Exec exec) {
    const fhr::MomentFn phi = fhr::make_moment("eff-fb", bench_options());
    const fhr::Panel& p = bench_panel();
    for (auto _ : state) benchmark::DoNotOptimize(fhr::moment_jacobian(phi, p, fhr::theta0(), exec));
    state.SetItemsProcessed(state.iterations() * kUnits);
}

}  // namespace

BENCHMARK_CAPTURE(BM_simulate_panel, serial, Exec::Serial)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_simulate_panel, parallel, Exec::Parallel)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_moment_mean, simple_serial, "simple", Exec::Serial)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_moment_mean, simple_parallel, "simple", Exec::Parallel)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_moment_mean, eff_fb_serial, "eff-fb", Exec::Serial)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_moment_mean, eff_fb_parallel, "eff-fb", Exec::Parallel)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_moment_stats, loceff_serial, "loceff", Exec::Serial)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_moment_stats, loceff_parallel, "loceff", Exec::Parallel)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_jacobian, serial, Exec::Serial)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_jacobian, parallel, Exec::Parallel)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
