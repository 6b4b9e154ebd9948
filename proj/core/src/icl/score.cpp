#include "evalm/icl/score.hpp"

#include <stdexcept>

#include "evalm/lm/forward.hpp"

namespace evalm::icl {

RenderedContext build_context(const lm::Model& model, const lm::Tokenizer& tokenizer,
                              const TaskSpec& task, const DemonstrationSet& demos) {
    RenderedContext ctx;
    for (const auto& ex : demos.exemplars) {
        if (!ex.has("label"))
            throw std::invalid_argument("build_context: exemplar without label field");
        ctx.text += render_template(task, ex, ex.at("label"));
        ctx.text += "\n";  // separator; the trailing one precedes the test rendering
    }

    ctx.tokens = tokenizer.encode(ctx.text, /*add_bos=*/true);
    ctx.token_count = static_cast<int64_t>(ctx.tokens.size()) - 1;

    incr::IncrementalState<double> state(model);
    ctx.next_logprobs = state.encode(ctx.tokens);
    ctx.snapshot = state.snapshot();
    return ctx;
}

namespace {

double score_conditional(const lm::Model& model, const RenderedContext& ctx,
                         std::span<const int32_t> cand) {
    double score = ctx.next_logprobs[static_cast<size_t>(cand[0])];
    if (cand.size() > 1) {
        incr::IncrementalState<double> state =
            incr::IncrementalState<double>::resume(model, ctx.snapshot);
        for (size_t i = 0; i + 1 < cand.size(); ++i) {
            std::vector<double> lp = state.step(cand[i]);
            score += lp[static_cast<size_t>(cand[i + 1])];
        }
    }
    return score;
}

double score_joint(const lm::Model& model, const RenderedContext& ctx,
                   std::span<const int32_t> cand) {
    std::vector<int32_t> seq = ctx.tokens;
    seq.insert(seq.end(), cand.begin(), cand.end());
    util::Mat<double> lp = lm::forward_lm<double>(model, seq);
    // Joint log-probability of everything after BOS.
    double score = 0.0;
    for (int64_t p = 0; p + 1 < lp.rows; ++p)
        score += lp(p, seq[static_cast<size_t>(p + 1)]);
    return score;
}

}  // namespace

Prediction predict(const lm::Model& model, const lm::Tokenizer& tokenizer,
                   const RenderedContext& context, const TaskSpec& task,
                   const util::JsonRecord& input, ScoreMode mode, bool length_normalize) {
    if (task.labels.empty()) throw std::invalid_argument("predict: empty label space");
    if (mode == ScoreMode::kConditional &&
        context.snapshot.data->config_digest != model.config_digest())
        throw std::runtime_error("predict: cached context does not match this model");

    Prediction pred;
    pred.scores.reserve(task.labels.size());
    for (const auto& label : task.labels) {
        const std::string cand_text = render_template(task, input, label);
        const std::vector<int32_t> cand = tokenizer.encode(cand_text);
        if (cand.empty())
            throw std::invalid_argument("predict: label '" + label + "' renders to no tokens");
        double score = mode == ScoreMode::kConditional ? score_conditional(model, context, cand)
                                                       : score_joint(model, context, cand);
        if (length_normalize) score /= static_cast<double>(cand.size());
        pred.scores.push_back(score);
    }

    pred.label_index = 0;
    for (size_t i = 1; i < pred.scores.size(); ++i) {
        if (pred.scores[i] > pred.scores[static_cast<size_t>(pred.label_index)])
            pred.label_index = static_cast<int64_t>(i);
    }
    pred.label = task.labels[static_cast<size_t>(pred.label_index)];
    return pred;
}

}  // namespace evalm::icl
