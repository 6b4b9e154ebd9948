#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evalm/icl/select.hpp"
#include "evalm/icl/task.hpp"
#include "evalm/incr/state.hpp"
#include "evalm/lm/model.hpp"
#include "evalm/lm/tokenizer.hpp"

namespace evalm::icl {

// Exemplars rendered into one demonstration context. Tokens start with BOS;
// rendered exemplars are separated by single newlines and the context ends
// with the separator that precedes the test rendering (absent at k = 0).
// Scoring runs in double precision. `next_logprobs` is the model output
// after the final context token, i.e. the distribution that scores the
// first candidate token.
struct RenderedContext {
    std::string text;
    int64_t token_count = 0;  // context tokens excluding BOS
    std::vector<int32_t> tokens;  // BOS + encoded text
    incr::StateSnapshot<double> snapshot;
    std::vector<double> next_logprobs;
};

RenderedContext build_context(const lm::Model& model, const lm::Tokenizer& tokenizer,
                              const TaskSpec& task, const DemonstrationSet& demos);

enum class ScoreMode {
    kJoint,        // Eq. 1: score [context; candidate] from scratch
    kConditional,  // Eq. 2: score the candidate conditioned on the cached state
};

struct Prediction {
    std::string label;
    int64_t label_index = 0;
    std::vector<double> scores;  // summed token log-probabilities per label
};

// Scores every candidate label rendering and returns the argmax (ties break
// to the lowest label index). Joint scores include the context tokens'
// log-probabilities, so the two modes differ per item by the constant
// log P(context) and always agree on the argmax. `length_normalize` divides
// each candidate's score by its token count (off by default: ranking is by
// raw sequence log-probability).
Prediction predict(const lm::Model& model, const lm::Tokenizer& tokenizer,
                   const RenderedContext& context, const TaskSpec& task,
                   const util::JsonRecord& input, ScoreMode mode,
                   bool length_normalize = false);

}  // namespace evalm::icl
