#include <benchmark/benchmark.h>

#include "mtrack/assess.hpp"
#include "mtrack/kalman.hpp"
#include "mtrack/mcmc.hpp"
#include "mtrack/preprocess.hpp"
#include "mtrack/simulate.hpp"

using namespace mtrack;

namespace {

ProcessedDataset bench_dataset(std::size_t I, std::size_t J, std::size_t N) {
    DesignSpec spec;
    spec.I = I;
    spec.J = J;
    spec.N = N;
    spec.K = {4};
    Rng rng = make_rng(7, 0);
    const Design d = generate_design(spec, rng);
    Rng rep = make_rng(7, 1);
    const std::vector<double> gamma{-0.05, -0.02, 0.16, 0.05};
    return to_dataset(d, simulate_replicate(d, gamma, {}, rep));
}

}  // namespace

static void BM_Loglik(benchmark::State& state) {
    const auto ds = bench_dataset(static_cast<std::size_t>(state.range(0)), 12, 101);
    const StateSpaceModel model(ds, {});
    const std::vector<double> gamma{0.0, 0.1, 0.2, 0.0};
    for (auto _ : state) benchmark::DoNotOptimize(model.loglik(gamma, FilterVariant::textbook));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(ds.N * ds.columns()));
}
BENCHMARK(BM_Loglik)->Arg(5)->Arg(20);

static void BM_FilterSmoother(benchmark::State& state) {
    const auto ds = bench_dataset(5, 12, 101);
    const StateSpaceModel model(ds, {});
    const std::vector<double> gamma{0.0, 0.1, 0.2, 0.0};
    for (auto _ : state) {
        const auto fr = model.filter(gamma, FilterVariant::textbook);
        benchmark::DoNotOptimize(kalman_smoother(fr));
    }
}
BENCHMARK(BM_FilterSmoother);

static void BM_VonMisesSample(benchmark::State& state) {
    const double kappa = static_cast<double>(state.range(0));
    Rng rng = make_rng(1, 0);
    for (auto _ : state) benchmark::DoNotOptimize(vonmises_sample(1.0, kappa, rng));
}
BENCHMARK(BM_VonMisesSample)->Arg(5)->Arg(300);

static void BM_Dtw(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng = make_rng(2, 0);
    std::uniform_real_distribution<double> u(0.0, kPi);
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(dtw_distance(a, b));
}
BENCHMARK(BM_Dtw)->Arg(101)->Arg(1000);

static void BM_MetropolisStep(benchmark::State& state) {
    const LogDensity target = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s -= 0.5 * v * v;
        return s;
    };
    MetropolisSettings s;
    s.niter = 1000;
    s.nwarmup = 500;
    for (auto _ : state) {
        Rng rng = make_rng(3, 0);
        benchmark::DoNotOptimize(run_metropolis(target, std::vector<double>(4, 0.0), s, rng));
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_MetropolisStep);

static void BM_Prepare(benchmark::State& state) {
    RawTrajectorySet raw;
    raw.factor_names = {"condition"};
    for (int s = 1; s <= 5; ++s)
        for (int t = 1; t <= 12; ++t)
            for (int k = 1; k <= 70; ++k) {
                const double u = (k - 1) / 69.0;
                raw.records.push_back({s, t, {"c" + std::to_string((t - 1) / 3 + 1)}, k, 300.0 + 250.0 * u * u, 20.0 + 400.0 * u});
            }
    for (auto _ : state) benchmark::DoNotOptimize(prepare_data(raw, 101, "~condition"));
}
BENCHMARK(BM_Prepare);
BENCHMARK_MAIN();
