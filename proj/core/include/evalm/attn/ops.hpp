#pragma once

#include <optional>
#include <span>
#include <vector>

#include "evalm/attn/kernels.hpp"

// Multi-head, model_dim-wide versions of the kernels. These are the public
// single-query operations; the language model applies the same kernels
// per head over whole sequences.

namespace evalm::attn {

// One remote chunk squeezed to a single key/value pair (all heads
// concatenated, model_dim wide).
template <class T>
struct CompressedChunk {
    std::vector<T> k_hat;
    std::vector<T> v_hat;
    IndexRange source_range;
};

template <class T>
struct PoolingParams {
    PoolingMode mode = PoolingMode::kMean;
    util::Mat<T> head_queries;  // num_heads x head_dim; ignored in mean mode
};

namespace detail {

template <class T>
void check_dim(const util::Mat<T>& m, int64_t d, const char* what) {
    if (m.cols != d) throw std::invalid_argument(std::string(what) + ": wrong feature width");
}

}  // namespace detail

template <class T>
CompressedChunk<T> compress_chunk(const util::Mat<T>& keys, const util::Mat<T>& values,
                                  const PoolingParams<T>& pooling, const AttnConfig& cfg,
                                  IndexRange source_range = {}) {
    cfg.validate();
    if (keys.rows != cfg.chunk_size || values.rows != cfg.chunk_size)
        throw std::invalid_argument("compress_chunk: chunk must have exactly chunk_size rows");
    detail::check_dim(keys, cfg.model_dim, "compress_chunk keys");
    detail::check_dim(values, cfg.model_dim, "compress_chunk values");
    const bool learned = pooling.mode == PoolingMode::kLearnedQuery;
    if (learned && (pooling.head_queries.rows != cfg.num_heads ||
                    pooling.head_queries.cols != cfg.head_dim()))
        throw std::invalid_argument("compress_chunk: pooling query shape mismatch");

    const int64_t dh = cfg.head_dim();
    CompressedChunk<T> out;
    out.k_hat.assign(static_cast<size_t>(cfg.model_dim), T(0));
    out.v_hat.assign(static_cast<size_t>(cfg.model_dim), T(0));
    out.source_range = source_range;

    std::vector<T> w(static_cast<size_t>(cfg.chunk_size));
    for (int64_t h = 0; h < cfg.num_heads; ++h) {
        const T* query = learned ? pooling.head_queries.row_ptr(h) : nullptr;
        pool_chunk(rows_of(keys, h * dh), rows_of(values, h * dh), query, dh,
                   out.k_hat.data() + h * dh, out.v_hat.data() + h * dh, w.data());
    }
    return out;
}

template <class T>
struct CompressChunkGrads {
    util::Mat<T> d_keys;
    util::Mat<T> d_values;
    util::Mat<T> d_head_queries;  // zero for mean mode
};

template <class T>
CompressChunkGrads<T> compress_chunk_backward(const util::Mat<T>& keys,
                                              const util::Mat<T>& values,
                                              const PoolingParams<T>& pooling,
                                              const AttnConfig& cfg,
                                              std::span<const T> d_k_hat,
                                              std::span<const T> d_v_hat) {
    const int64_t dh = cfg.head_dim();
    const bool learned = pooling.mode == PoolingMode::kLearnedQuery;

    CompressChunkGrads<T> g;
    g.d_keys = util::Mat<T>(keys.rows, keys.cols);
    g.d_values = util::Mat<T>(values.rows, values.cols);
    g.d_head_queries = util::Mat<T>(cfg.num_heads, dh);

    std::vector<T> w(static_cast<size_t>(cfg.chunk_size));
    std::vector<T> khat(static_cast<size_t>(dh)), vhat(static_cast<size_t>(dh));
    std::vector<T> scratch;
    for (int64_t h = 0; h < cfg.num_heads; ++h) {
        const T* query = learned ? pooling.head_queries.row_ptr(h) : nullptr;
        pool_chunk(rows_of(keys, h * dh), rows_of(values, h * dh), query, dh, khat.data(),
                   vhat.data(), w.data());
        pool_chunk_backward(rows_of(keys, h * dh), rows_of(values, h * dh), query, dh, w.data(),
                            d_k_hat.data() + h * dh, d_v_hat.data() + h * dh,
                            mut_rows_of(g.d_keys, h * dh), mut_rows_of(g.d_values, h * dh),
                            learned ? g.d_head_queries.row_ptr(h) : nullptr, scratch);
    }
    return g;
}

// Concatenated softmax attention of q_t over [compressed remote; local].
// `probs_out`, when given, receives the per-head weight rows back to back
// (num_heads x (n_remote + n_local)).
template <class T>
std::vector<T> eva_attend(std::span<const T> q_t,
                          std::span<const CompressedChunk<T>> compressed,
                          const util::Mat<T>& local_keys, const util::Mat<T>& local_values,
                          const AttnConfig& cfg, std::vector<T>* probs_out = nullptr) {
    cfg.validate();
    if (static_cast<int64_t>(q_t.size()) != cfg.model_dim)
        throw std::invalid_argument("eva_attend: query width mismatch");
    if (local_keys.rows < 1 || local_keys.rows != local_values.rows)
        throw std::invalid_argument("eva_attend: local rows invalid");
    detail::check_dim(local_keys, cfg.model_dim, "eva_attend local keys");
    detail::check_dim(local_values, cfg.model_dim, "eva_attend local values");

    const int64_t nr = static_cast<int64_t>(compressed.size());
    util::Mat<T> khat(nr, cfg.model_dim), vhat(nr, cfg.model_dim);
    for (int64_t j = 0; j < nr; ++j) {
        if (static_cast<int64_t>(compressed[j].k_hat.size()) != cfg.model_dim ||
            static_cast<int64_t>(compressed[j].v_hat.size()) != cfg.model_dim)
            throw std::invalid_argument("eva_attend: compressed chunk width mismatch");
        std::copy(compressed[j].k_hat.begin(), compressed[j].k_hat.end(), khat.row_ptr(j));
        std::copy(compressed[j].v_hat.begin(), compressed[j].v_hat.end(), vhat.row_ptr(j));
    }

    const int64_t dh = cfg.head_dim();
    const int64_t n = nr + local_keys.rows;
    std::vector<T> out(static_cast<size_t>(cfg.model_dim));
    std::vector<T> probs(static_cast<size_t>(n));
    if (probs_out != nullptr) probs_out->clear();
    for (int64_t h = 0; h < cfg.num_heads; ++h) {
        attend_two(q_t.data() + h * dh, rows_of(khat, h * dh), rows_of(vhat, h * dh),
                   rows_of(local_keys, h * dh), rows_of(local_values, h * dh), dh,
                   out.data() + h * dh, probs.data());
        if (probs_out != nullptr) probs_out->insert(probs_out->end(), probs.begin(), probs.end());
    }
    return out;
}

template <class T>
struct EvaAttendGrads {
    std::vector<T> d_q;
    util::Mat<T> d_khat;  // n_remote x model_dim
    util::Mat<T> d_vhat;
    util::Mat<T> d_local_keys;
    util::Mat<T> d_local_values;
};

template <class T>
EvaAttendGrads<T> eva_attend_backward(std::span<const T> q_t,
                                      std::span<const CompressedChunk<T>> compressed,
                                      const util::Mat<T>& local_keys,
                                      const util::Mat<T>& local_values, const AttnConfig& cfg,
                                      std::span<const T> d_out) {
    const int64_t dh = cfg.head_dim();
    const int64_t nr = static_cast<int64_t>(compressed.size());

    util::Mat<T> khat(nr, cfg.model_dim), vhat(nr, cfg.model_dim);
    for (int64_t j = 0; j < nr; ++j) {
        std::copy(compressed[j].k_hat.begin(), compressed[j].k_hat.end(), khat.row_ptr(j));
        std::copy(compressed[j].v_hat.begin(), compressed[j].v_hat.end(), vhat.row_ptr(j));
    }

    EvaAttendGrads<T> g;
    g.d_q.assign(q_t.size(), T(0));
    g.d_khat = util::Mat<T>(nr, cfg.model_dim);
    g.d_vhat = util::Mat<T>(nr, cfg.model_dim);
    g.d_local_keys = util::Mat<T>(local_keys.rows, local_keys.cols);
    g.d_local_values = util::Mat<T>(local_values.rows, local_values.cols);

    const int64_t n = nr + local_keys.rows;
    std::vector<T> probs(static_cast<size_t>(n)), out(static_cast<size_t>(dh)), scratch;
    for (int64_t h = 0; h < cfg.num_heads; ++h) {
        attend_two(q_t.data() + h * dh, rows_of(khat, h * dh), rows_of(vhat, h * dh),
                   rows_of(local_keys, h * dh), rows_of(local_values, h * dh), dh, out.data(),
                   probs.data());
        attend_two_backward(q_t.data() + h * dh, rows_of(khat, h * dh), rows_of(vhat, h * dh),
                            rows_of(local_keys, h * dh), rows_of(local_values, h * dh), dh,
                            probs.data(), d_out.data() + h * dh, g.d_q.data() + h * dh,
                            mut_rows_of(g.d_khat, h * dh), mut_rows_of(g.d_vhat, h * dh),
                            mut_rows_of(g.d_local_keys, h * dh),
                            mut_rows_of(g.d_local_values, h * dh), scratch);
    }
    return g;
}

// Exact softmax attention over the whole prefix; the oracle eva_attend is
// checked against for short sequences.
template <class T>
std::vector<T> vanilla_attend(std::span<const T> q_t, const util::Mat<T>& keys,
                              const util::Mat<T>& values, const AttnConfig& cfg,
                              std::vector<T>* probs_out = nullptr) {
    cfg.validate();
    if (keys.rows < 1) throw std::invalid_argument("vanilla_attend: empty keys");
    if (keys.rows != values.rows)
        throw std::invalid_argument("vanilla_attend: key/value row mismatch");
    if (static_cast<int64_t>(q_t.size()) != cfg.model_dim)
        throw std::invalid_argument("vanilla_attend: query width mismatch");
    detail::check_dim(keys, cfg.model_dim, "vanilla_attend keys");
    detail::check_dim(values, cfg.model_dim, "vanilla_attend values");

    const int64_t dh = cfg.head_dim();
    std::vector<T> out(static_cast<size_t>(cfg.model_dim));
    std::vector<T> probs(static_cast<size_t>(keys.rows));
    if (probs_out != nullptr) probs_out->clear();
    RowsView<T> none{};
    for (int64_t h = 0; h < cfg.num_heads; ++h) {
        attend_two(q_t.data() + h * dh, rows_of(keys, h * dh), rows_of(values, h * dh), none,
                   none, dh, out.data() + h * dh, probs.data());
        if (probs_out != nullptr) probs_out->insert(probs_out->end(), probs.begin(), probs.end());
    }
    return out;
}

}  // namespace evalm::attn
