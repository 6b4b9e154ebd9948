#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "evalm/lm/checkpoint.hpp"
#include "evalm/lm/flops.hpp"
#include "evalm/lm/forward.hpp"
#include "evalm/lm/perplexity.hpp"
#include "evalm/lm/tokenizer.hpp"
#include "evalm/lm/train.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace evalm;

namespace {

lm::ModelConfig tiny_config() {
    lm::ModelConfig cfg;
    cfg.vocab_size = 16;
    cfg.num_layers = 1;
    cfg.attn = {8, 2, 3, 16, attn::PoolingMode::kLearnedQuery};
    cfg.ffn_multiplier = 2;
    cfg.max_train_len = 16;
    return cfg;
}

lm::ModelConfig small_config() {
    lm::ModelConfig cfg;
    cfg.vocab_size = 257;
    cfg.num_layers = 2;
    cfg.attn = {32, 4, 8, 64, attn::PoolingMode::kLearnedQuery};
    cfg.max_train_len = 64;
    return cfg;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE_BEGIN("lm");

TEST_CASE("zero output head yields the uniform distribution") {
    lm::ModelConfig cfg = tiny_config();
    cfg.vocab_size = 256;
    cfg.tie_embeddings = false;
    lm::Model model = synth::random_model(cfg, 1);
    model.params.head.zero();

    auto tokens = synth::random_tokens(10, cfg.vocab_size, 2);
    auto lp = lm::forward_lm<double>(model, tokens);
    const double expect = -std::log(256.0);
    for (int64_t p = 0; p < lp.rows; ++p) {
        for (int64_t v = 0; v < lp.cols; ++v)
            CHECK(lp(p, v) == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("log-probabilities normalize at every position") {
    lm::Model model = synth::random_model(small_config(), 3);
    auto tokens = synth::random_tokens(40, model.config.vocab_size, 4);

    auto lp64 = lm::forward_lm<double>(model, tokens);
    for (int64_t p = 0; p < lp64.rows; ++p) {
        double sum = 0.0;
        for (int64_t v = 0; v < lp64.cols; ++v) sum += std::exp(lp64(p, v));
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    auto lp32 = lm::forward_lm<float>(model, tokens);
    for (int64_t p = 0; p < lp32.rows; ++p) {
        double sum = 0.0;
        for (int64_t v = 0; v < lp32.cols; ++v) sum += std::exp(static_cast<double>(lp32(p, v)));
        CHECK(std::abs(sum - 1.0) < 1e-5);
    }
}

TEST_CASE("same seed gives identical models and outputs") {
    lm::Model a = synth::random_model(small_config(), 7);
    lm::Model b = synth::random_model(small_config(), 7);
    auto tokens = synth::random_tokens(20, a.config.vocab_size, 8);
    auto la = lm::forward_lm<float>(a, tokens);
    auto lb = lm::forward_lm<float>(b, tokens);
    REQUIRE(la.size() == lb.size());
    for (int64_t i = 0; i < la.size(); ++i)
        CHECK(la.data[static_cast<size_t>(i)] == lb.data[static_cast<size_t>(i)]);
}

TEST_CASE("future tokens never influence earlier logits") {
    lm::Model model = synth::random_model(small_config(), 9);
    auto tokens = synth::random_tokens(33, model.config.vocab_size, 10);
    auto base = lm::forward_lm<double>(model, tokens);

    auto perturbed = tokens;
    for (size_t i = 20; i < perturbed.size(); ++i)
        perturbed[i] = (perturbed[i] + 3) % static_cast<int32_t>(model.config.vocab_size);
    auto lp = lm::forward_lm<double>(model, perturbed);
    for (int64_t p = 0; p < 20; ++p) {
        for (int64_t v = 0; v < lp.cols; ++v)
            CHECK(std::abs(lp(p, v) - base(p, v)) < 1e-12);
    }
}

TEST_CASE("forward_lm validates its inputs") {
    lm::Model model = synth::random_model(tiny_config(), 11);
    CHECK_THROWS_AS(lm::forward_lm<double>(model, {}), std::invalid_argument);
    std::vector<int32_t> bad = {0, 5, 99};
    CHECK_THROWS_AS(lm::forward_lm<double>(model, bad), std::invalid_argument);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    lm::Model model = synth::random_model(small_config(), 13);
    const std::string path = temp_path("evalm_ckpt_test.evlm");
    lm::save_checkpoint(model, path);
    lm::Model loaded = lm::load_checkpoint(path);

    std::vector<const util::Mat<float>*> orig, back;
    lm::for_each_tensor(model.params, [&](const std::string&, const util::Mat<float>& m) {
        orig.push_back(&m);
    });
    lm::for_each_tensor(loaded.params, [&](const std::string&, const util::Mat<float>& m) {
        back.push_back(&m);
    });
    REQUIRE(orig.size() == back.size());
    for (size_t i = 0; i < orig.size(); ++i) CHECK(orig[i]->data == back[i]->data);

    auto tokens = synth::random_tokens(17, model.config.vocab_size, 14);
    auto la = lm::forward_lm<float>(model, tokens);
    auto lb = lm::forward_lm<float>(loaded, tokens);
    for (int64_t i = 0; i < la.size(); ++i)
        CHECK(la.data[static_cast<size_t>(i)] == lb.data[static_cast<size_t>(i)]);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint header guards against config tampering") {
    lm::Model model = synth::random_model(tiny_config(), 15);
    const std::string path = temp_path("evalm_ckpt_tamper.evlm");
    lm::save_checkpoint(model, path);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const std::string needle = "\"num_heads\":2";
    const size_t at = bytes.find(needle);
    REQUIRE(at != std::string::npos);
    bytes[at + needle.size() - 1] = '4';
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    CHECK_THROWS(lm::load_checkpoint(path));
    std::filesystem::remove(path);
}

TEST_CASE("gradients through a full block match finite differences") {
    lm::Model model = synth::random_model(tiny_config(), 17);
    // Seven tokens with chunk size 3: two compressed chunks plus a partial
    // local buffer, so the check covers the compression path too.
    auto tokens = synth::random_tokens(7, model.config.vocab_size, 18);

    lm::ParamsT<double> grads = lm::zeros_like<double>(model.params);
    util::Rng rng(0);
    lm::line_loss_and_grad<double>(model, tokens, grads, 0.0, rng);

    auto loss = [&]() {
        lm::ParamsT<double> g = lm::zeros_like<double>(model.params);
        util::Rng r(0);
        return lm::line_loss_and_grad<double>(model, tokens, g, 0.0, r);
    };

    std::vector<std::pair<std::string, const util::Mat<double>*>> analytic;
    lm::for_each_tensor(grads, [&](const std::string& name, const util::Mat<double>& m) {
        analytic.emplace_back(name, &m);
    });
    size_t ti = 0;
    lm::for_each_tensor(model.params, [&](const std::string& name, util::Mat<float>& m) {
        REQUIRE(analytic[ti].first == name);
        const util::Mat<double>& g = *analytic[ti].second;
        ++ti;
        auto fd = oracle::fd_grad<float>(loss, m.data.data(), m.data.size());
        double worst = 0.0;
        for (size_t i = 0; i < fd.size(); ++i)
            worst = std::max(worst, oracle::rel_err(g.data[i], fd[i]));
        INFO("tensor ", name, " worst rel err ", worst);
        CHECK(worst < 1e-3);
    });
}

TEST_CASE("clip rescales a norm-10 gradient to exactly the clip norm") {
    lm::Model model = synth::random_model(tiny_config(), 19);
    lm::ParamsT<double> grads = lm::zeros_like<double>(model.params);
    // Entries 6 and 8: global L2 norm 10.
    grads.tok_embed(0, 0) = 6.0;
    grads.cpe(0, 0) = 8.0;
    const double pre = lm::clip_gradients(grads, 1.0);
    CHECK(pre == doctest::Approx(10.0).epsilon(1e-12));
    double sq = 0.0;
    lm::for_each_tensor(grads, [&](const std::string&, const util::Mat<double>& m) {
        for (double g : m.data) sq += g * g;
    });
    CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-12));

    grads.tok_embed(0, 0) = 0.3;
    grads.cpe(0, 0) = 0.4;
    const double pre2 = lm::clip_gradients(grads, 1.0);
    CHECK(pre2 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(grads.tok_embed(0, 0) == doctest::Approx(0.3));
}

TEST_CASE("polynomial decay runs from the base rate to zero") {
    lm::TrainConfig tc;
    tc.learning_rate = 8e-5;
    tc.total_steps = 201;
    CHECK(lm::lr_at_step(tc, 0) == doctest::Approx(8e-5).epsilon(1e-15));
    CHECK(lm::lr_at_step(tc, 200) == doctest::Approx(0.0));
    CHECK(lm::lr_at_step(tc, 100) == doctest::Approx(4e-5).epsilon(1e-12));
}

TEST_CASE("short overfit run drives the loss down deterministically") {
    lm::Tokenizer tok = lm::Tokenizer::byte_level();
    lm::ModelConfig cfg = small_config();
    cfg.max_train_len = 48;
    const std::string sentence = "the quick brown fox jumps over the lazy dog";
    std::vector<std::string> corpus(8, sentence);
    auto lines = lm::pack_corpus(corpus, tok, cfg.max_train_len, true);
    REQUIRE(!lines.empty());

    lm::TrainConfig tc;
    tc.learning_rate = 3e-3;
    tc.total_steps = 60;
    tc.batch_lines = 2;
    tc.dropout = 0.0;
    tc.seed = 21;
    auto res = lm::train_lm(lines, cfg, tc);

    // 10-step moving average strictly decreasing over the early steps.
    auto ma = [&](int64_t s) {
        double acc = 0.0;
        for (int64_t i = s; i < s + 10; ++i) acc += res.log[static_cast<size_t>(i)].loss;
        return acc / 10.0;
    };
    for (int64_t s = 0; s + 11 <= 50; ++s) CHECK(ma(s + 1) < ma(s));

    CHECK(res.log.front().lr == doctest::Approx(3e-3));
    CHECK(res.log.back().lr == doctest::Approx(0.0));

    auto res2 = lm::train_lm(lines, cfg, tc);
    for (size_t i = 0; i < res.log.size(); ++i) CHECK(res.log[i].loss == res2.log[i].loss);
}

TEST_CASE("training aborts with the step index when the loss turns non-finite") {
    lm::Tokenizer tok = lm::Tokenizer::byte_level();
    lm::ModelConfig cfg = small_config();
    cfg.max_train_len = 32;
    auto lines = lm::pack_corpus({"aaaa bbbb cccc dddd eeee ffff gggg hhhh"}, tok,
                                 cfg.max_train_len, true);
    lm::TrainConfig tc;
    tc.learning_rate = 1e12;  // guaranteed blow-up
    tc.total_steps = 10;
    tc.batch_lines = 1;
    tc.seed = 23;
    try {
        lm::train_lm(lines, cfg, tc);
        FAIL("expected non-finite loss abort");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("empty corpus is rejected") {
    lm::TrainConfig tc;
    tc.total_steps = 1;
    CHECK_THROWS_AS(lm::train_lm({}, tiny_config(), tc), std::runtime_error);
}

TEST_CASE("flops_estimate is the 6 * params * tokens rule") {
    CHECK(lm::flops_estimate(1e6, 1e6) == doctest::Approx(6e12));
    CHECK(lm::flops_estimate(2e6, 3e6) == doctest::Approx(2.0 * lm::flops_estimate(1e6, 3e6)));
    CHECK_THROWS_AS(lm::flops_estimate(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(lm::flops_estimate(1, -5), std::invalid_argument);

    // Inverting the rule for the 350M dense baseline at 3.84e20 FLOPs
    // implies a token budget in the 1e11 range.
    const double implied_tokens = 3.84e20 / (6.0 * 350e6);
    CHECK(implied_tokens > 1e11);
    CHECK(implied_tokens < 3e11);
    CHECK(lm::flops_estimate(350e6, implied_tokens) == doctest::Approx(3.84e20));
}

TEST_CASE("uniform model has perplexity equal to the vocabulary size") {
    lm::ModelConfig cfg = tiny_config();
    cfg.vocab_size = 256;
    cfg.tie_embeddings = false;
    lm::Model model = synth::random_model(cfg, 25);
    model.params.head.zero();

    auto stream = synth::random_tokens(64, cfg.vocab_size, 26);
    const int64_t buckets[] = {8, 16};
    auto ppl = lm::perplexity(model, stream, buckets);
    for (const auto& b : ppl) CHECK(b.ppl == doctest::Approx(256.0).epsilon(1e-9));
}

TEST_CASE("incremental and direct perplexity agree beyond the training length") {
    lm::ModelConfig cfg = small_config();
    cfg.max_train_len = 32;
    lm::Model model = synth::random_model(cfg, 27);
    auto stream = synth::random_tokens(128, cfg.vocab_size, 28);

    const int64_t buckets[] = {32, 64};  // 64 > max_train_len: incremental path
    auto ppl = lm::perplexity(model, stream, buckets);

    double nll = 0.0;
    int64_t preds = 0;
    for (int64_t off = 0; off + 64 <= 128; off += 64) {
        auto lp = lm::forward_lm<double>(
            model, std::span(stream).subspan(static_cast<size_t>(off), 64));
        for (int64_t p = 0; p + 1 < 64; ++p) {
            nll -= lp(p, stream[static_cast<size_t>(off + p + 1)]);
            ++preds;
        }
    }
    const double direct = std::exp(nll / static_cast<double>(preds));
    CHECK(std::abs(ppl[1].ppl - direct) < 1e-10 * direct);

    CHECK_THROWS_AS(
        lm::perplexity(model, std::span<const int32_t>{}, std::span<const int64_t>(buckets, 2)),
        std::invalid_argument);
    const int64_t too_long[] = {1024};
    CHECK_THROWS_AS(lm::perplexity(model, stream, too_long), std::invalid_argument);
}

TEST_CASE("byte tokenizer round-trips and word tokenizer maps OOV to unk") {
    lm::Tokenizer byte = lm::Tokenizer::byte_level();
    util::Rng rng(29);
    for (int iter = 0; iter < 50; ++iter) {
        std::string s;
        const int64_t n = rng.uniform_int(40);
        for (int64_t i = 0; i < n; ++i) s.push_back(static_cast<char>(32 + rng.uniform_int(95)));
        auto ids = byte.encode(s);
        CHECK(byte.decode(ids) == s);
        for (int32_t id : ids) CHECK(id < byte.vocab_size());
    }
    CHECK(byte.encode("ab", true)[0] == byte.bos_id());

    std::vector<std::string> corpus = {"red green blue", "red blue", "red"};
    lm::Tokenizer word = lm::Tokenizer::word_level(corpus, 16);
    CHECK(word.vocab_size() <= 16);
    auto ids = word.encode("red blue green");
    CHECK(word.decode(ids) == "red blue green");
    auto oov = word.encode("chartreuse");
    REQUIRE(oov.size() == 1);
    CHECK(oov[0] == 0);  // <unk>

    const std::string path = temp_path("evalm_tok_test.json");
    word.save(path);
    lm::Tokenizer loaded = lm::Tokenizer::load(path);
    CHECK(loaded.encode("red blue green") == ids);
    std::filesystem::remove(path);
}

TEST_CASE("pack_corpus slices the token stream into fixed lines") {
    lm::Tokenizer tok = lm::Tokenizer::byte_level();
    std::vector<std::string> texts = {std::string(100, 'x'), std::string(50, 'y')};
    auto lines = lm::pack_corpus(texts, tok, 32, true);
    // 152 stream tokens (two separators included) cut into bodies of 31.
    CHECK(lines.size() == 4);
    for (const auto& line : lines) {
        CHECK(static_cast<int64_t>(line.size()) == 32);
        CHECK(line[0] == tok.bos_id());
    }
    auto no_bos = lm::pack_corpus(texts, tok, 32, false);
    CHECK(no_bos.size() == 4);
    CHECK(no_bos[0][0] == static_cast<int32_t>('x'));
}

TEST_CASE("paper-scale presets carry the published shapes") {
    const auto m350 = lm::ModelConfig::paper_350m();
    CHECK(m350.attn.model_dim == 1024);
    CHECK(m350.attn.num_heads == 16);
    CHECK(m350.num_layers == 24);
    CHECK(m350.max_train_len == 8192);
    const auto m13 = lm::ModelConfig::paper_1_3b();
    CHECK(m13.attn.model_dim == 2048);
    CHECK(m13.attn.num_heads == 32);
    CHECK(m13.num_layers == 24);
    m350.validate();
    m13.validate();
    lm::ModelConfig::toy().validate();
}

TEST_SUITE_END();
