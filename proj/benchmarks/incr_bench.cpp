#include <benchmark/benchmark.h>

#include "evalm/incr/state.hpp"
#include "evalm/util/rng.hpp"

using namespace evalm;

namespace {

lm::Model bench_model() {
    lm::Model m;
    m.config = lm::ModelConfig::toy();
    m.init(7);
    return m;
}

}  // namespace

// Per-token encoding cost once the state holds `t` tokens.
static void BM_StepAtDepth(benchmark::State& state) {
    static lm::Model model = bench_model();
    const int64_t depth = state.range(0);
    util::Rng rng(11);
    incr::IncrementalState<float> st(model);
    for (int64_t i = 0; i < depth; ++i)
        st.step(static_cast<int32_t>(rng.uniform_int(model.config.vocab_size)));
    for (auto _ : state) {
        st.step(static_cast<int32_t>(rng.uniform_int(model.config.vocab_size)));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StepAtDepth)->Arg(256)->Arg(2048)->Arg(8192);

// Snapshot + resume + short continuation: the ICL fan-out inner loop.
static void BM_SnapshotResumeScore(benchmark::State& state) {
    static lm::Model model = bench_model();
    util::Rng rng(13);
    incr::IncrementalState<double> st(model);
    for (int64_t i = 0; i < 512; ++i)
        st.step(static_cast<int32_t>(rng.uniform_int(model.config.vocab_size)));
    auto snap = st.snapshot();
    std::vector<int32_t> cont(24);
    for (auto& t : cont) t = static_cast<int32_t>(rng.uniform_int(model.config.vocab_size));
    for (auto _ : state) {
        auto resumed = incr::IncrementalState<double>::resume(model, snap);
        benchmark::DoNotOptimize(resumed.encode(cont));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cont.size()));
}
BENCHMARK(BM_SnapshotResumeScore);
