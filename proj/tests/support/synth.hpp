#pragma once

// Synthetic fixtures shared by the unit and acceptance suites.

#include <cstdint>
#include <string>
#include <vector>

#include "evalm/icl/task.hpp"
#include "evalm/lm/model.hpp"
#include "evalm/util/rng.hpp"

namespace synth {

inline evalm::lm::Model random_model(const evalm::lm::ModelConfig& cfg, uint64_t seed) {
    evalm::lm::Model m;
    m.config = cfg;
    m.init(seed);
    return m;
}

inline std::vector<int32_t> random_tokens(int64_t n, int64_t vocab, uint64_t seed) {
    evalm::util::Rng rng(seed);
    std::vector<int32_t> out(static_cast<size_t>(n));
    for (auto& t : out) t = static_cast<int32_t>(rng.uniform_int(vocab));
    return out;
}

// Position-keyed token stream: the class pattern has period 8 (not resolvable
// from 1..3 preceding classes alone), tokens are uniform within the phase
// class. A model that reads its position table predicts at ppl ~ 10; one that
// loses phase information beyond the training range cannot.
inline constexpr int kPhasePattern[8] = {0, 0, 1, 0, 1, 1, 0, 1};  // 0 -> class A, 1 -> class B
inline constexpr int32_t kClassBase[2] = {10, 30};
inline constexpr int32_t kClassSize = 10;

inline std::vector<int32_t> phase_stream(int64_t n, uint64_t seed) {
    evalm::util::Rng rng(seed);
    std::vector<int32_t> out(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        const int cls = kPhasePattern[i % 8];
        out[static_cast<size_t>(i)] =
            kClassBase[cls] + static_cast<int32_t>(rng.uniform_int(kClassSize));
    }
    return out;
}

inline std::vector<std::vector<int32_t>> phase_lines(int64_t lines, int64_t line_len,
                                                     uint64_t seed) {
    std::vector<std::vector<int32_t>> out;
    for (int64_t l = 0; l < lines; ++l)
        out.push_back(phase_stream(line_len, seed + static_cast<uint64_t>(l) * 7919u));
    return out;
}

// Three-way synthetic classification task over short random-letter sentences.
inline evalm::icl::TaskSpec synthetic_task() {
    evalm::icl::TaskSpec task;
    task.name = "synth3";
    task.template_str = "{Sentence} It is {Label}";
    task.labels = {"alpha", "beta", "gamma"};
    task.fields = {"Sentence"};
    return task;
}

inline std::string random_sentence(evalm::util::Rng& rng, int64_t words) {
    std::string out;
    for (int64_t w = 0; w < words; ++w) {
        if (w > 0) out.push_back(' ');
        const int64_t len = 2 + rng.uniform_int(5);
        for (int64_t i = 0; i < len; ++i)
            out.push_back(static_cast<char>('a' + rng.uniform_int(26)));
    }
    return out;
}

inline evalm::icl::TaskData synthetic_task_data(int64_t train_n, int64_t val_n, int64_t test_n,
                                                uint64_t seed) {
    evalm::util::Rng rng(seed);
    const evalm::icl::TaskSpec task = synthetic_task();
    auto make = [&](int64_t n) {
        std::vector<evalm::util::JsonRecord> out;
        for (int64_t i = 0; i < n; ++i) {
            evalm::util::JsonRecord rec;
            rec.fields["Sentence"] = random_sentence(rng, 3 + rng.uniform_int(4));
            rec.fields["label"] = task.labels[static_cast<size_t>(rng.uniform_int(3))];
            out.push_back(std::move(rec));
        }
        return out;
    };
    evalm::icl::TaskData data;
    data.train = make(train_n);
    data.validation = make(val_n);
    data.test = make(test_n);
    return data;
}

}  // namespace synth
