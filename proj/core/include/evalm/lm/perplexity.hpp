#pragma once

#include <span>
#include <vector>

#include "evalm/lm/model.hpp"

namespace evalm::lm {

struct PplBucket {
    int64_t length = 0;
    double ppl = 0.0;
    int64_t windows = 0;
};

// Perplexity per length bucket: the stream is cut into non-overlapping
// windows of the bucket length and exp(mean NLL) is taken over the windows'
// next-token predictions (positions 2..L of each window). Buckets longer
// than the model's training length are evaluated by incremental encoding;
// shorter ones by a direct forward pass — the two agree to rounding.
std::vector<PplBucket> perplexity(const Model& model, std::span<const int32_t> stream,
                                  std::span<const int64_t> bucket_lengths,
                                  Precision precision = Precision::kF64);

}  // namespace evalm::lm
