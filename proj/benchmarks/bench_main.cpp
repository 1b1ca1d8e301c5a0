#include <benchmark/benchmark.h>

#include <cmath>
#include <optional>
#include <vector>

#include "assouadlab/covering.hpp"
#include "assouadlab/dimension.hpp"
#include "assouadlab/porosity.hpp"
#include "assouadlab/refine.hpp"

using namespace assouadlab;

namespace {

const PointSet& seq_sample(std::size_t n) {
    static std::size_t cached_n = 0;
    static std::optional<PointSet> cached;
    if (cached_n != n) {
        cached = normalize(generate(spec::SequencePower{1.0}, n)).set;
        cached_n = n;
    }
    return *cached;
}

}  // namespace

static void BM_CountDyadic(benchmark::State& state) {
    const PointSet& e = seq_sample(static_cast<std::size_t>(state.range(0)));
    const DiscIndex index(e);
    for (auto _ : state) {
        benchmark::DoNotOptimize(count_dyadic(index, e.points()[0], 0.25, 20));
    }
}
BENCHMARK(BM_CountDyadic)->Arg(1000)->Arg(10000);

static void BM_CountChain(benchmark::State& state) {
    const PointSet& e = seq_sample(static_cast<std::size_t>(state.range(0)));
    const DiscIndex index(e);
    std::vector<double> R;
    std::vector<int> m_hi;
    for (int k = 1; k <= 16; ++k) {
        R.push_back(std::ldexp(1.0, -k));
        m_hi.push_back(20);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(count_dyadic_chain(index, e.points()[0], R, m_hi));
    }
}
BENCHMARK(BM_CountChain)->Arg(1000)->Arg(10000);

static void BM_CountTable(benchmark::State& state) {
    const PointSet& e = seq_sample(2000);
    EstimatorParams p;
    p.center_budget = static_cast<std::size_t>(state.range(0));
    p.threads = 1;
    for (auto _ : state) {
        CountTable t(e, p);
        benchmark::DoNotOptimize(t.best(std::nullopt).value);
    }
}
BENCHMARK(BM_CountTable)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_Porosity(benchmark::State& state) {
    const PointSet e = normalize(generate(spec::Cantor{1.0 / 3.0, 8}, 256)).set;
    PorosityParams p;
    p.center_budget = static_cast<std::size_t>(state.range(0));
    p.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(estimate_porosity(e, p).lambda_hat);
}
BENCHMARK(BM_Porosity)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Refine(benchmark::State& state) {
    const MapExpr h = parse_map("pow(3)");
    const Square root{{0, 0}, 0.5};
    const double target = std::ldexp(1.0, -static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(refine(h, root, target).total_minors());
}
BENCHMARK(BM_Refine)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
