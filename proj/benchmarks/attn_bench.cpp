#include <benchmark/benchmark.h>

#include "evalm/attn/ops.hpp"
#include "evalm/util/rng.hpp"

using namespace evalm;

namespace {

constexpr int64_t kDim = 256;
constexpr int64_t kHeads = 4;
constexpr int64_t kChunk = 128;

attn::AttnConfig bench_cfg() { return {kDim, kHeads, kChunk, 8192, attn::PoolingMode::kLearnedQuery}; }

util::Mat<float> random_mat(int64_t r, int64_t c, util::Rng& rng) {
    util::Mat<float> m(r, c);
    for (auto& v : m.data) v = static_cast<float>(rng.normal());
    return m;
}

}  // namespace

// One-query attention cost over the full prefix (quadratic baseline).
static void BM_VanillaAttend(benchmark::State& state) {
    const int64_t t = state.range(0);
    util::Rng rng(1);
    auto cfg = bench_cfg();
    util::Mat<float> K = random_mat(t, kDim, rng), V = random_mat(t, kDim, rng);
    std::vector<float> q(kDim);
    for (auto& x : q) x = static_cast<float>(rng.normal());
    for (auto _ : state) {
        benchmark::DoNotOptimize(attn::vanilla_attend<float>(q, K, V, cfg));
    }
    state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(BM_VanillaAttend)->Arg(1024)->Arg(4096)->Arg(16384);

// Same query against compressed remote chunks plus the local buffer.
static void BM_EvaAttend(benchmark::State& state) {
    const int64_t t = state.range(0);
    util::Rng rng(2);
    auto cfg = bench_cfg();
    const int64_t chunks = t / kChunk;
    std::vector<attn::CompressedChunk<float>> compressed(static_cast<size_t>(chunks));
    for (auto& ch : compressed) {
        ch.k_hat.resize(kDim);
        ch.v_hat.resize(kDim);
        for (auto& x : ch.k_hat) x = static_cast<float>(rng.normal());
        for (auto& x : ch.v_hat) x = static_cast<float>(rng.normal());
    }
    util::Mat<float> lk = random_mat(kChunk, kDim, rng), lv = random_mat(kChunk, kDim, rng);
    std::vector<float> q(kDim);
    for (auto& x : q) x = static_cast<float>(rng.normal());
    for (auto _ : state) {
        benchmark::DoNotOptimize(attn::eva_attend<float>(q, compressed, lk, lv, cfg));
    }
    state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(BM_EvaAttend)->Arg(1024)->Arg(4096)->Arg(16384);

static void BM_CompressChunk(benchmark::State& state) {
    util::Rng rng(3);
    auto cfg = bench_cfg();
    util::Mat<float> keys = random_mat(kChunk, kDim, rng), vals = random_mat(kChunk, kDim, rng);
    attn::PoolingParams<float> pooling{attn::PoolingMode::kLearnedQuery,
                                       random_mat(kHeads, kDim / kHeads, rng)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(attn::compress_chunk(keys, vals, pooling, cfg));
    }
}
BENCHMARK(BM_CompressChunk);
