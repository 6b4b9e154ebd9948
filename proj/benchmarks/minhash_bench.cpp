#include <benchmark/benchmark.h>

#include "evalm/corpus/minhash.hpp"
#include "evalm/util/rng.hpp"

using namespace evalm;

static void BM_MinhashSignature(benchmark::State& state) {
    const int64_t words = state.range(0);
    util::Rng rng(17);
    std::string doc;
    for (int64_t i = 0; i < words; ++i) {
        if (!doc.empty()) doc.push_back(' ');
        const int64_t len = 3 + rng.uniform_int(8);
        for (int64_t j = 0; j < len; ++j)
            doc.push_back(static_cast<char>('a' + rng.uniform_int(26)));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(corpus::minhash_signature(doc, 1));
    }
    state.SetItemsProcessed(state.iterations() * words);
}
BENCHMARK(BM_MinhashSignature)->Arg(100)->Arg(1000);

static void BM_EstimateSimilarity(benchmark::State& state) {
    auto a = corpus::minhash_signature("one two three four five six", 1);
    auto b = corpus::minhash_signature("one two three seven eight nine", 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(corpus::estimate_similarity(a, b));
    }
}
BENCHMARK(BM_EstimateSimilarity);
