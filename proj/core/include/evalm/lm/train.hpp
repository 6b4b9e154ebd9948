#pragma once

#include <functional>
#include <string>
#include <vector>

#include "evalm/lm/config.hpp"
#include "evalm/lm/model.hpp"
#include "evalm/lm/tokenizer.hpp"

namespace evalm::lm {

// Tokenizes and concatenates documents (newline-delimited between docs) and
// slices the stream into fixed-length training lines; a trailing partial
// line is dropped. With prepend_bos each line starts with the BOS token.
std::vector<std::vector<int32_t>> pack_corpus(const std::vector<std::string>& texts,
                                              const Tokenizer& tokenizer, int64_t line_len,
                                              bool prepend_bos);

// Rescales gradients to the global L2 clip norm when they exceed it; returns
// the pre-clip norm.
template <class T>
double clip_gradients(ParamsT<T>& grads, double clip_norm);

struct StepLog {
    int64_t step;
    double loss;
    double lr;
    double grad_norm;
};

struct TrainResult {
    Model model;
    std::vector<StepLog> log;
};

// NLL training with AdamW (decoupled weight decay), global-norm clipping and
// polynomial LR decay to zero. Deterministic for a fixed seed regardless of
// the worker-thread count (per-line gradient buffers are reduced in line
// order). `log_csv_path` may be empty; when set, a step,loss,lr,grad_norm
// CSV is written. Throws if the loss turns non-finite, naming the step.
TrainResult train_lm(const std::vector<std::vector<int32_t>>& lines, const ModelConfig& mc,
                     const TrainConfig& tc, const std::string& log_csv_path = {},
                     const std::function<void(const StepLog&)>& on_step = {});

}  // namespace evalm::lm
