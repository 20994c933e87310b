#include "cbidr/rng.hpp"
#include "cbidr/topsis.hpp"

#include <benchmark/benchmark.h>

namespace {

// Two cost criteria, the shape used by fused retrieval.
void BM_TopsisRank(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    cbidr::Rng rng(3);
    std::vector<std::vector<double>> columns(2, std::vector<double>(m));
    for (auto& column : columns)
        for (auto& x : column) x = rng.uniform(0.0, 100.0);
    const auto decision = cbidr::DecisionMatrix::from_columns(columns);
    const cbidr::TopsisConfig config{{0.5, 0.5}, {cbidr::Criterion::cost, cbidr::Criterion::cost}};
    for (auto _ : state) benchmark::DoNotOptimize(cbidr::rank(decision, config));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}
BENCHMARK(BM_TopsisRank)->Arg(100)->Arg(1'000)->Arg(10'000);

}  // namespace
