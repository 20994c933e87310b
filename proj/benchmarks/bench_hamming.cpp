#include "cbidr/clinical.hpp"
#include "cbidr/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_AllHamming(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto bits = static_cast<std::size_t>(state.range(1));
    cbidr::Rng rng(4);
    auto random_bits = [&] {
        cbidr::ClinicalBits b(bits, 0);
        for (std::size_t i = 0; i < bits; ++i) b.set(i, rng.bernoulli(0.5));
        return b;
    };
    std::vector<cbidr::ClinicalBits> db;
    for (std::size_t i = 0; i < m; ++i) db.push_back(random_bits());
    const auto query = random_bits();
    for (auto _ : state) benchmark::DoNotOptimize(cbidr::all_hamming(db, query));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}
BENCHMARK(BM_AllHamming)->Args({10'000, 13})->Args({10'000, 512});

}  // namespace
