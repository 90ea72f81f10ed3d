#include <benchmark/benchmark.h>
#include <omp.h>

#include <algorithm>
#include <map>
#include <memory>
#include <vector>

#include "rapidlog/embedding.hpp"
#include "rapidlog/retrieval.hpp"
#include "rapidlog/sequence_store.hpp"
#include "rapidlog/synthetic.hpp"

using namespace rapidlog;

namespace {

struct Fixture {
    EmbeddingMap docs;
    std::unique_ptr<DocumentIndex> index;
    std::vector<EmbeddedSequence> queries;
};

// D of n_docs unique synthetic sequences and 1000 perturbed queries, dim 32.
const Fixture& fixture(std::size_t n_docs) {
    static std::map<std::size_t, Fixture> cache;
    auto [it, inserted] = cache.try_emplace(n_docs);
    Fixture& f = it->second;
    if (!inserted) return f;
    const auto rules = RuleSet::defaults();
    const ProviderConfig provider;
    auto [db, lookup] =
        build_db(apply_masks(gen_synthetic(SyntheticSpec{.n_types = n_docs, .logs_per_type = 1, .seed = 3}), rules));
    f.docs = embed_batch(db, provider);
    f.index = std::make_unique<DocumentIndex>(f.docs);
    auto test = gen_synthetic(SyntheticSpec{.n_types = n_docs, .logs_per_type = 1, .anomaly_rate = 0.3, .seed = 4});
    test.resize(std::min<std::size_t>(test.size(), 1000));
    auto [qdb, qlookup] = build_db(apply_masks(test, rules));
    for (auto& [id, e] : embed_batch(qdb, provider)) f.queries.push_back(std::move(e));
    return f;
}

void BM_ScoreSerial(benchmark::State& state) {
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    const auto cfg = CoreSetConfig::with_ratio(0.01);
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_queries_serial(f.queries, *f.index, cfg));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.queries.size()));
}

void BM_ScoreParallel(benchmark::State& state) {
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    const auto cfg = CoreSetConfig::with_ratio(0.01);
    const int workers = static_cast<int>(state.range(1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_queries(f.queries, *f.index, cfg, workers));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.queries.size()));
    state.counters["workers"] = workers;
}

void BM_KnnCore(benchmark::State& state) {
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    const std::size_t k = std::max<std::size_t>(1, f.index->size() / 100);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(knn_core(f.queries[i++ % f.queries.size()], *f.index, k));
    }
    state.SetItemsProcessed(state.iterations());
}

void BM_BruteForce(benchmark::State& state) {
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            brute_force_score(f.queries[i++ % f.queries.size()], *f.index, FeatureMode::all_tokens, Aggregation::sum));
    }
    state.SetItemsProcessed(state.iterations());
}

void BM_MaxSim(benchmark::State& state) {
    const auto& f = fixture(1000);
    const auto& d = f.docs.begin()->second;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(maxsim(f.queries[i++ % f.queries.size()], d, Aggregation::sum));
    }
    state.SetItemsProcessed(state.iterations());
}

void worker_args(benchmark::internal::Benchmark* b) {
    for (const int n : {1000, 10000}) {
        for (int w = 1; w <= omp_get_num_procs(); w *= 2) b->Args({n, w});
    }
}

}  // namespace

BENCHMARK(BM_ScoreSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Apply(worker_args)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_KnnCore)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BruteForce)->Arg(1000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MaxSim);

BENCHMARK_MAIN();
