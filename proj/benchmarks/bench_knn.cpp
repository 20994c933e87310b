#include "cbidr/rng.hpp"
#include "cbidr/vector_index.hpp"

#include <benchmark/benchmark.h>

namespace {

cbidr::VectorIndex make_index(std::size_t m, std::size_t dim) {
    cbidr::Rng rng(1);
    std::vector<cbidr::EmbeddingRecord> records;
    records.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        cbidr::Embedding v(dim);
        for (auto& x : v) x = static_cast<float>(rng.normal());
        records.push_back({i, "c", std::move(v)});
    }
    return cbidr::VectorIndex::build(std::move(records));
}

void BM_KnnSearch(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto dim = static_cast<std::size_t>(state.range(1));
    const auto index = make_index(m, dim);
    cbidr::Rng rng(2);
    cbidr::Embedding query(dim);
    for (auto& x : query) x = static_cast<float>(rng.normal());
    for (auto _ : state) benchmark::DoNotOptimize(index.knn_search(query, 5));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}
BENCHMARK(BM_KnnSearch)->Args({1'000, 64})->Args({10'000, 64})->Args({10'000, 512});

void BM_AllDistances(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto index = make_index(m, 64);
    const cbidr::Embedding query(64, 0.5f);
    for (auto _ : state) benchmark::DoNotOptimize(index.all_distances(query));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}
BENCHMARK(BM_AllDistances)->Arg(1'000)->Arg(10'000);

}  // namespace
