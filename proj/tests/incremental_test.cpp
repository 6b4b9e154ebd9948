#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "evalm/incr/state.hpp"
#include "evalm/lm/forward.hpp"
#include "support/synth.hpp"

using namespace evalm;

namespace {

lm::ModelConfig state_config() {
    lm::ModelConfig cfg;
    cfg.vocab_size = 64;
    cfg.num_layers = 2;
    cfg.attn = {16, 2, 4, 32, attn::PoolingMode::kLearnedQuery};
    cfg.max_train_len = 32;
    return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("incremental");

TEST_CASE("fresh states start empty and share a digest") {
    lm::Model model = synth::random_model(state_config(), 1);
    incr::IncrementalState<double> a(model);
    incr::IncrementalState<double> b(model);
    CHECK(a.token_count() == 0);
    auto f = a.footprint();
    CHECK(f.rows_local == 0);
    CHECK(f.rows_remote == 0);
    CHECK(f.bytes_estimate == 0);
    CHECK(a.digest() == b.digest());
    CHECK(a.snapshot().digest == a.digest());
}

TEST_CASE("row counts follow the fill-and-compress rule") {
    lm::Model model = synth::random_model(state_config(), 2);
    const int64_t c = model.config.attn.chunk_size;
    incr::IncrementalState<float> state(model);
    auto tokens = synth::random_tokens(8 * c + 3, model.config.vocab_size, 3);
    for (int64_t t = 0; t < static_cast<int64_t>(tokens.size()); ++t) {
        state.step(tokens[static_cast<size_t>(t)]);
        const auto f = state.footprint();
        CHECK(f.rows_local == (t + 1) % c);
        CHECK(f.rows_remote == (t + 1) / c);
        // Buffers across layers agree with the footprint.
        for (const auto& L : state.data().layers) {
            CHECK(L.local_k.rows == (t + 1) % c);
            CHECK(L.remote_k.rows == (t + 1) / c);
        }
    }
    // After exactly c steps the local buffer has been flushed once.
    incr::IncrementalState<float> fresh(model);
    for (int64_t t = 0; t < c; ++t) fresh.step(tokens[static_cast<size_t>(t)]);
    CHECK(fresh.footprint().rows_local == 0);
    CHECK(fresh.footprint().rows_remote == 1);
}

TEST_CASE("footprint matches the closed form at t = 10c + 3") {
    lm::Model model = synth::random_model(state_config(), 4);
    const int64_t c = model.config.attn.chunk_size;
    incr::IncrementalState<float> state(model);
    state.encode(synth::random_tokens(10 * c + 3, model.config.vocab_size, 5));
    const auto f = state.footprint();
    CHECK(f.rows_local == 3);
    CHECK(f.rows_remote == 10);
    CHECK(f.bytes_estimate ==
          (10 + 3) * model.config.attn.model_dim * model.config.num_layers * 2 *
              static_cast<int64_t>(sizeof(float)));
}

TEST_CASE("stepping reproduces the full-sequence forward pass") {
    lm::Model model = synth::random_model(state_config(), 6);
    const int64_t c = model.config.attn.chunk_size;
    auto tokens = synth::random_tokens(3 * c, model.config.vocab_size, 7);

    auto full64 = lm::forward_lm<double>(model, tokens);
    incr::IncrementalState<double> st64(model);
    for (size_t t = 0; t < tokens.size(); ++t) {
        auto lp = st64.step(tokens[t]);
        for (int64_t v = 0; v < full64.cols; ++v)
            CHECK(std::abs(lp[static_cast<size_t>(v)] - full64(static_cast<int64_t>(t), v)) <
                  1e-10);
    }

    auto full32 = lm::forward_lm<float>(model, tokens);
    incr::IncrementalState<float> st32(model);
    for (size_t t = 0; t < tokens.size(); ++t) {
        auto lp = st32.step(tokens[t]);
        for (int64_t v = 0; v < full32.cols; ++v)
            CHECK(std::abs(static_cast<double>(lp[static_cast<size_t>(v)]) -
                           static_cast<double>(full32(static_cast<int64_t>(t), v))) < 1e-5);
    }
}

TEST_CASE("encode is a fold over step") {
    lm::Model model = synth::random_model(state_config(), 8);
    auto a = synth::random_tokens(13, model.config.vocab_size, 9);
    auto b = synth::random_tokens(9, model.config.vocab_size, 10);

    incr::IncrementalState<double> split(model);
    split.encode(a);
    split.encode(b);

    std::vector<int32_t> joined = a;
    joined.insert(joined.end(), b.begin(), b.end());
    incr::IncrementalState<double> once(model);
    once.encode(joined);

    CHECK(split.digest() == once.digest());

    // Empty input leaves the state untouched.
    const uint64_t before = once.digest();
    auto out = once.encode({});
    CHECK(out.empty());
    CHECK(once.digest() == before);
}

TEST_CASE("snapshots are immutable under resumed scoring") {
    lm::Model model = synth::random_model(state_config(), 11);
    incr::IncrementalState<double> state(model);
    state.encode(synth::random_tokens(21, model.config.vocab_size, 12));
    auto snap = state.snapshot();

    // Resume with zero steps: same digest.
    auto resumed = incr::IncrementalState<double>::resume(model, snap);
    CHECK(resumed.digest() == snap.digest);

    // Score two continuations in both orders from the same snapshot.
    auto y1 = synth::random_tokens(6, model.config.vocab_size, 13);
    auto y2 = synth::random_tokens(6, model.config.vocab_size, 14);
    auto score = [&](const std::vector<int32_t>& cont) {
        auto st = incr::IncrementalState<double>::resume(model, snap);
        double total = 0.0;
        std::vector<double> lp;
        for (size_t i = 0; i < cont.size(); ++i) {
            lp = st.step(cont[i]);
            if (i + 1 < cont.size()) total += lp[static_cast<size_t>(cont[i + 1])];
        }
        return total;
    };
    const double s1a = score(y1);
    const double s2a = score(y2);
    const double s2b = score(y2);
    const double s1b = score(y1);
    CHECK(s1a == s1b);
    CHECK(s2a == s2b);

    for (int i = 0; i < 100; ++i) score(y1);
    CHECK(state.snapshot().digest == snap.digest);

    // The original state can keep encoding without disturbing the snapshot.
    state.encode(synth::random_tokens(5, model.config.vocab_size, 15));
    CHECK(snap.digest == incr::state_digest(*snap.data));
}

TEST_CASE("prefix sharing equals monolithic encoding") {
    lm::Model model = synth::random_model(state_config(), 16);
    auto prefix = synth::random_tokens(19, model.config.vocab_size, 17);
    auto suffix = synth::random_tokens(11, model.config.vocab_size, 18);

    incr::IncrementalState<double> pre(model);
    pre.encode(prefix);
    auto resumed = incr::IncrementalState<double>::resume(model, pre.snapshot());
    auto lp_shared = resumed.encode(suffix);

    std::vector<int32_t> whole = prefix;
    whole.insert(whole.end(), suffix.begin(), suffix.end());
    incr::IncrementalState<double> mono(model);
    auto lp_mono = mono.encode(whole);

    CHECK(resumed.digest() == mono.digest());
    for (size_t v = 0; v < lp_mono.size(); ++v)
        CHECK(std::abs(lp_shared[v] - lp_mono[v]) < 1e-5);
}

TEST_CASE("config mismatches are rejected") {
    lm::Model model = synth::random_model(state_config(), 19);
    lm::ModelConfig other_cfg = state_config();
    other_cfg.num_layers = 3;
    lm::Model other = synth::random_model(other_cfg, 19);

    incr::IncrementalState<double> state(model);
    state.encode(synth::random_tokens(5, model.config.vocab_size, 20));
    auto snap = state.snapshot();
    CHECK_THROWS_AS(incr::IncrementalState<double>::resume(other, snap), std::runtime_error);
    CHECK_THROWS_AS(state.step(-1), std::invalid_argument);
    CHECK_THROWS_AS(state.step(static_cast<int32_t>(model.config.vocab_size)),
                    std::invalid_argument);
}

TEST_CASE("state cache files round-trip") {
    lm::Model model = synth::random_model(state_config(), 21);
    incr::IncrementalState<double> state(model);
    state.encode(synth::random_tokens(23, model.config.vocab_size, 22));

    const auto path =
        (std::filesystem::temp_directory_path() / "evalm_state_test.evlm").string();
    incr::save_state_f64(state, path);
    auto loaded = incr::load_state_f64(model, path);
    CHECK(loaded.digest() == state.digest());
    CHECK(loaded.token_count() == state.token_count());

    // Continuations behave identically.
    auto cont = synth::random_tokens(7, model.config.vocab_size, 23);
    auto a = state.encode(cont);
    auto b = loaded.encode(cont);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    lm::ModelConfig other_cfg = state_config();
    other_cfg.vocab_size = 65;
    lm::Model other = synth::random_model(other_cfg, 24);
    CHECK_THROWS_AS(incr::load_state_f64(other, path), std::runtime_error);
    CHECK_THROWS_AS(incr::load_state_f32(model, path), std::runtime_error);  // dtype mismatch
    std::filesystem::remove(path);
}

TEST_SUITE_END();
