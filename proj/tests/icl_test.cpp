#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "evalm/icl/pack.hpp"
#include "evalm/icl/score.hpp"
#include "evalm/icl/select.hpp"
#include "evalm/icl/task.hpp"
#include "support/synth.hpp"

using namespace evalm;

namespace {

lm::ModelConfig icl_model_config() {
    lm::ModelConfig cfg;
    cfg.vocab_size = 257;  // byte tokenizer ids + BOS
    cfg.num_layers = 2;
    cfg.attn = {32, 4, 16, 128, attn::PoolingMode::kLearnedQuery};
    cfg.max_train_len = 128;
    return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("icl");

TEST_CASE("templates render the documented strings") {
    auto reg = icl::TaskRegistry::builtin();

    util::JsonRecord sst;
    sst.fields["Sentence"] = "a gripping film";
    CHECK(icl::render_template(reg.get("SST-2"), sst, std::string("Positive")) ==
          "Positive Movie Review: a gripping film");
    CHECK(icl::render_template(reg.get("SST-5"), sst, std::string("good")) ==
          "a gripping film It is good");

    util::JsonRecord ag;
    ag.fields["Sentence"] = "markets rallied today";
    CHECK(icl::render_template(reg.get("AgNews"), ag, std::string("world")) ==
          "markets rallied today It is about world");

    util::JsonRecord mnli;
    mnli.fields["Premise"] = "A dog runs";
    mnli.fields["Hypothesis"] = "An animal moves";
    CHECK(icl::render_template(reg.get("MNLI"), mnli, std::string("Yes")) ==
          "A dog runs?Yes, An animal moves");

    util::JsonRecord wic;
    wic.fields["Sentence1"] = "He sat by the bank.";
    wic.fields["Sentence2"] = "The bank closed.";
    wic.fields["Word"] = "bank";
    CHECK(icl::render_template(reg.get("WiC"), wic, std::string("no")) ==
          "He sat by the bank.\nThe bank closed.\nquestion: Is the word bank used in the same "
          "way in the two sentences above?\nanswer: no");

    util::JsonRecord copa;
    copa.fields["Premise"] = "The lights went out.";
    copa.fields["Choice1"] = "The fuse blew.";
    copa.fields["Choice2"] = "The sun rose.";
    CHECK(icl::render_template(reg.get("COPA"), copa, std::string("false")) ==
          "Context: The lights went out.\nCorrect Answer: The fuse blew.");
    CHECK(icl::render_template(reg.get("COPA"), copa, std::string("true")) ==
          "Context: The lights went out.\nCorrect Answer: The sun rose.");
}

TEST_CASE("rendering rejects labels outside the space and unknown tasks") {
    auto reg = icl::TaskRegistry::builtin();
    util::JsonRecord rec;
    rec.fields["Sentence"] = "s";
    CHECK_THROWS_AS(icl::render_template(reg.get("SST-5"), rec, std::string("wonderful")),
                    std::invalid_argument);
    CHECK_THROWS_AS(reg.get("NoSuchTask"), std::invalid_argument);
}

TEST_CASE("distinct labels render distinct texts for a fixed input") {
    auto reg = icl::TaskRegistry::builtin();
    util::Rng rng(100);
    for (const auto& name : reg.names()) {
        const auto& task = reg.get(name);
        util::JsonRecord rec;
        for (const auto& f : task.fields) rec.fields[f] = synth::random_sentence(rng, 3);
        if (name == "COPA") {
            rec.fields["Choice1"] = "choice one";
            rec.fields["Choice2"] = "choice two";
        }
        std::set<std::string> seen;
        for (const auto& label : task.labels)
            seen.insert(icl::render_template(task, rec, label));
        CHECK(seen.size() == task.labels.size());
    }
}

TEST_CASE("registry files round-trip the template table") {
    auto reg = icl::TaskRegistry::builtin();
    const auto path = (std::filesystem::temp_directory_path() / "evalm_templates.json").string();
    reg.to_file(path);
    auto loaded = icl::TaskRegistry::from_file(path);
    for (const auto& name : reg.names()) {
        CHECK(loaded.get(name).template_str == reg.get(name).template_str);
        CHECK(loaded.get(name).labels == reg.get(name).labels);
    }
    std::filesystem::remove(path);
}

TEST_CASE("joint and conditional scoring agree on the argmax") {
    lm::Model model = synth::random_model(icl_model_config(), 31);
    lm::Tokenizer tok = lm::Tokenizer::byte_level();
    auto task = synth::synthetic_task();
    auto data = synth::synthetic_task_data(32, 0, 20, 32);

    for (int64_t k : {0, 4}) {
        auto demos = icl::select_random(std::span(data.train), k, 7);
        auto ctx = icl::build_context(model, tok, task, demos);
        for (const auto& item : data.test) {
            auto joint = icl::predict(model, tok, ctx, task, item, icl::ScoreMode::kJoint);
            auto cond = icl::predict(model, tok, ctx, task, item, icl::ScoreMode::kConditional);
            CHECK(joint.label == cond.label);
            // The two paths differ by the constant log P(context) per item.
            const double diff0 = joint.scores[0] - cond.scores[0];
            for (size_t i = 1; i < joint.scores.size(); ++i)
                CHECK(std::abs((joint.scores[i] - cond.scores[i]) - diff0) < 1e-6);
        }
    }
}

TEST_CASE("single-label tasks return that label and ties break low") {
    lm::Model model = synth::random_model(icl_model_config(), 33);
    lm::Tokenizer tok = lm::Tokenizer::byte_level();

    icl::TaskSpec one;
    one.name = "one";
    one.template_str = "{Sentence} -> {Label}";
    one.labels = {"only"};
    one.fields = {"Sentence"};
    util::JsonRecord rec;
    rec.fields["Sentence"] = "whatever";
    auto ctx = icl::build_context(model, tok, one, {});
    auto pred = icl::predict(model, tok, ctx, one, rec, icl::ScoreMode::kConditional);
    CHECK(pred.label == "only");

    icl::TaskSpec dup = one;
    dup.name = "dup";
    dup.labels = {"same", "same"};
    auto pred2 = icl::predict(model, tok, ctx, dup, rec, icl::ScoreMode::kConditional);
    CHECK(pred2.scores[0] == pred2.scores[1]);
    CHECK(pred2.label_index == 0);
}

TEST_CASE("length normalization divides scores by candidate token count") {
    lm::Model model = synth::random_model(icl_model_config(), 34);
    lm::Tokenizer tok = lm::Tokenizer::byte_level();
    auto task = synth::synthetic_task();
    auto ctx = icl::build_context(model, tok, task, {});
    util::JsonRecord rec;
    rec.fields["Sentence"] = "short words here";

    auto raw = icl::predict(model, tok, ctx, task, rec, icl::ScoreMode::kConditional, false);
    auto norm = icl::predict(model, tok, ctx, task, rec, icl::ScoreMode::kConditional, true);
    for (size_t i = 0; i < task.labels.size(); ++i) {
        const auto n = tok.encode(icl::render_template(task, rec, task.labels[i])).size();
        CHECK(norm.scores[i] ==
              doctest::Approx(raw.scores[i] / static_cast<double>(n)).epsilon(1e-12));
    }
}

TEST_CASE("conditional scoring rejects snapshots from another model") {
    lm::Model model = synth::random_model(icl_model_config(), 35);
    lm::ModelConfig other_cfg = icl_model_config();
    other_cfg.num_layers = 3;
    lm::Model other = synth::random_model(other_cfg, 35);
    lm::Tokenizer tok = lm::Tokenizer::byte_level();
    auto task = synth::synthetic_task();
    auto ctx = icl::build_context(model, tok, task, {});
    util::JsonRecord rec;
    rec.fields["Sentence"] = "x";
    CHECK_THROWS_AS(icl::predict(other, tok, ctx, task, rec, icl::ScoreMode::kConditional),
                    std::runtime_error);
}

TEST_CASE("select_random draws without replacement, deterministically") {
    auto data = synth::synthetic_task_data(40, 0, 0, 41);
    auto zero = icl::select_random(std::span(data.train), 0, 5);
    CHECK(zero.exemplars.empty());

    auto a = icl::select_random(std::span(data.train), 12, 5);
    auto b = icl::select_random(std::span(data.train), 12, 5);
    REQUIRE(a.exemplars.size() == 12);
    std::set<std::string> seen;
    for (size_t i = 0; i < a.exemplars.size(); ++i) {
        CHECK(a.exemplars[i].at("Sentence") == b.exemplars[i].at("Sentence"));
        seen.insert(a.exemplars[i].at("Sentence"));
    }
    CHECK(seen.size() == 12);  // sentences are unique with overwhelming probability

    auto all = icl::select_random(std::span(data.train), 40, 6);
    CHECK(all.exemplars.size() == 40);
    CHECK_THROWS_AS(icl::select_random(std::span(data.train), 41, 6), std::invalid_argument);
}

namespace {

// One-hot embeddings: orthogonal across distinct ids.
class OneHotEmbedder : public icl::Embedder {
public:
    std::vector<double> embed(std::string_view text) const override {
        std::vector<double> v(64, 0.0);
        size_t idx = 63;
        if (!text.empty() && text[0] == 'r') idx = static_cast<size_t>(std::stoi(std::string(text.substr(1))));
        v[idx] = 1.0;
        return v;
    }
};

}  // namespace

TEST_CASE("select_topk ranks by cosine and places the best last") {
    icl::TaskSpec task = synth::synthetic_task();

    // Orthogonal embeddings: all similarities tie at zero, so the selection
    // is the first k by index.
    std::vector<util::JsonRecord> train(10);
    for (size_t i = 0; i < train.size(); ++i)
        train[i].fields["Sentence"] = "r" + std::to_string(i);
    util::JsonRecord query;
    query.fields["Sentence"] = "q";
    OneHotEmbedder onehot;
    auto ties = icl::select_topk(task, std::span(train), query, 4, onehot);
    std::set<std::string> picked;
    for (const auto& e : ties.exemplars) picked.insert(e.at("Sentence"));
    CHECK(picked == std::set<std::string>{"r0", "r1", "r2", "r3"});

    // A query literally present in the training split is selected and
    // placed adjacent to the test input (last).
    icl::TrigramEmbedder tri;
    util::Rng rng(43);
    std::vector<util::JsonRecord> train2(12);
    for (auto& r : train2) r.fields["Sentence"] = synth::random_sentence(rng, 5);
    util::JsonRecord q2;
    q2.fields["Sentence"] = train2[7].at("Sentence");
    auto sel = icl::select_topk(task, std::span(train2), q2, 3, tri);
    CHECK(sel.exemplars.back().at("Sentence") == q2.at("Sentence"));

    // Brute-force oracle over random embeddings.
    auto brute = [&](int64_t k) {
        std::vector<std::pair<double, int64_t>> scored;
        auto qe = tri.embed(icl::embedding_text(task, q2));
        for (int64_t i = 0; i < static_cast<int64_t>(train2.size()); ++i) {
            auto e = tri.embed(icl::embedding_text(task, train2[static_cast<size_t>(i)]));
            double dot = 0.0;
            for (size_t j = 0; j < e.size(); ++j) dot += e[j] * qe[j];
            scored.emplace_back(dot, i);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::vector<int64_t> idx;
        for (int64_t r = k - 1; r >= 0; --r) idx.push_back(scored[static_cast<size_t>(r)].second);
        return idx;
    };
    auto sel5 = icl::select_topk(task, std::span(train2), q2, 5, tri);
    auto want = brute(5);
    REQUIRE(sel5.exemplars.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i)
        CHECK(sel5.exemplars[i].at("Sentence") ==
              train2[static_cast<size_t>(want[i])].at("Sentence"));

    CHECK_THROWS_AS(icl::select_topk(task, std::span(train2), q2, 0, tri),
                    std::invalid_argument);
    CHECK_THROWS_AS(icl::select_topk(task, std::span(train2), q2, 99, tri),
                    std::invalid_argument);
}

TEST_CASE("pack_msit follows greedy first fit") {
    const int64_t one[] = {100};
    auto r = icl::pack_msit(one, 8192);
    REQUIRE(r.lines.size() == 1);
    CHECK(r.lines[0].token_len == 100);

    std::vector<int64_t> threes(5, 3000);
    r = icl::pack_msit(threes, 8192);
    REQUIRE(r.lines.size() == 3);
    CHECK(r.lines[0].token_len == 6000);
    CHECK(r.lines[1].token_len == 6000);
    CHECK(r.lines[2].token_len == 3000);

    std::vector<std::string> warnings;
    const int64_t big[] = {9000, 10};
    r = icl::pack_msit(big, 8192, [&](const std::string& w) { warnings.push_back(w); });
    REQUIRE(r.skipped.size() == 1);
    CHECK(r.skipped[0] == 0);
    REQUIRE(r.lines.size() == 1);
    CHECK(r.lines[0].token_len == 10);
    CHECK(warnings.size() == 1);

    CHECK_THROWS_AS(icl::pack_msit(one, 0), std::invalid_argument);
}

TEST_CASE("packing never overflows and preserves the multiset") {
    util::Rng rng(47);
    for (int iter = 0; iter < 100; ++iter) {
        const int64_t budget = iter % 2 == 0 ? 8192 : 16384;
        std::vector<int64_t> lens(static_cast<size_t>(1 + rng.uniform_int(60)));
        for (auto& l : lens) l = 1 + rng.uniform_int(12000);
        auto r = icl::pack_msit(lens, budget, [](const std::string&) {});

        std::multiset<int64_t> input(lens.begin(), lens.end());
        std::multiset<int64_t> packed;
        for (const auto& line : r.lines) {
            CHECK(line.token_len <= budget);
            int64_t sum = 0;
            for (int64_t idx : line.exemplar_indices) {
                packed.insert(lens[static_cast<size_t>(idx)]);
                sum += lens[static_cast<size_t>(idx)];
            }
            CHECK(sum == line.token_len);
        }
        for (int64_t idx : r.skipped) {
            CHECK(lens[static_cast<size_t>(idx)] > budget);
            packed.insert(lens[static_cast<size_t>(idx)]);
        }
        CHECK(packed == input);
    }
}

TEST_SUITE_END();
