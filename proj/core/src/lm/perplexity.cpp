#include "evalm/lm/perplexity.hpp"

#include <cmath>
#include <stdexcept>

#include "evalm/incr/state.hpp"
#include "evalm/lm/forward.hpp"

namespace evalm::lm {

namespace {

template <class Tv>
double window_nll_direct(const Model& model, std::span<const int32_t> window) {
    util::Mat<Tv> lp = forward_lm<Tv>(model, window);
    double nll = 0.0;
    for (int64_t p = 0; p + 1 < lp.rows; ++p)
        nll -= static_cast<double>(lp(p, window[static_cast<size_t>(p + 1)]));
    return nll;
}

template <class Tv>
double window_nll_incremental(const Model& model, std::span<const int32_t> window) {
    incr::IncrementalState<Tv> state(model);
    double nll = 0.0;
    for (size_t i = 0; i + 1 < window.size(); ++i) {
        std::vector<Tv> lp = state.step(window[i]);
        nll -= static_cast<double>(lp[static_cast<size_t>(window[i + 1])]);
    }
    return nll;
}

template <class Tv>
std::vector<PplBucket> perplexity_impl(const Model& model, std::span<const int32_t> stream,
                                       std::span<const int64_t> buckets) {
    std::vector<PplBucket> out;
    for (int64_t L : buckets) {
        if (L < 2) throw std::invalid_argument("perplexity: bucket length must be >= 2");
        if (static_cast<int64_t>(stream.size()) < L)
            throw std::invalid_argument("perplexity: stream shorter than bucket " +
                                        std::to_string(L));
        double nll = 0.0;
        int64_t windows = 0;
        int64_t preds = 0;
        const bool incremental = L > model.config.max_train_len;
        for (int64_t off = 0; off + L <= static_cast<int64_t>(stream.size()); off += L) {
            auto window = stream.subspan(static_cast<size_t>(off), static_cast<size_t>(L));
            nll += incremental ? window_nll_incremental<Tv>(model, window)
                               : window_nll_direct<Tv>(model, window);
            ++windows;
            preds += L - 1;
        }
        out.push_back({L, std::exp(nll / static_cast<double>(preds)), windows});
    }
    return out;
}

}  // namespace

std::vector<PplBucket> perplexity(const Model& model, std::span<const int32_t> stream,
                                  std::span<const int64_t> bucket_lengths, Precision precision) {
    if (stream.empty()) throw std::invalid_argument("perplexity: empty stream");
    if (precision == Precision::kF32) return perplexity_impl<float>(model, stream, bucket_lengths);
    return perplexity_impl<double>(model, stream, bucket_lengths);
}

}  // namespace evalm::lm
