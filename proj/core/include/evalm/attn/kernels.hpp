#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "evalm/attn/config.hpp"
#include "evalm/util/matrix.hpp"

// Attention and chunk-compression kernels. Everything is templated on the
// scalar type: float for the fast path, double for oracle comparisons and
// finite-difference gradient checks. The sequence model, the incremental
// encoder and the public single-query ops all route through attend_two /
// pool_chunk, so there is exactly one softmax-attention implementation.

namespace evalm::attn {

template <class T>
struct RowsView {
    const T* base = nullptr;
    int64_t n = 0;
    int64_t stride = 0;

    const T* row(int64_t i) const { return base + i * stride; }
};

template <class T>
struct MutRowsView {
    T* base = nullptr;
    int64_t n = 0;
    int64_t stride = 0;

    T* row(int64_t i) const { return base + i * stride; }
};

template <class T>
RowsView<T> rows_of(const util::Mat<T>& m, int64_t col0 = 0) {
    return {m.data.data() + col0, m.rows, m.cols};
}

template <class T>
MutRowsView<T> mut_rows_of(util::Mat<T>& m, int64_t col0 = 0) {
    return {m.data.data() + col0, m.rows, m.cols};
}

namespace detail {

template <class T>
T dot(const T* a, const T* b, int64_t n) {
    T acc = T(0);
    for (int64_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <class T>
void softmax_inplace(T* z, int64_t n) {
    T m = z[0];
    for (int64_t i = 1; i < n; ++i) m = std::max(m, z[i]);
    T sum = T(0);
    for (int64_t i = 0; i < n; ++i) {
        z[i] = std::exp(z[i] - m);
        sum += z[i];
    }
    const T inv = T(1) / sum;
    for (int64_t i = 0; i < n; ++i) z[i] *= inv;
}

}  // namespace detail

// Softmax attention of one query over two concatenated key/value segments
// (compressed remote features first, local features second; either segment
// may be empty). `probs` receives keys1.n + keys2.n weights; `out` gets
// head_dim values. Scaling is 1/sqrt(head_dim).
template <class T>
void attend_two(const T* q, RowsView<T> keys1, RowsView<T> vals1, RowsView<T> keys2,
                RowsView<T> vals2, int64_t head_dim, T* out, T* probs) {
    const int64_t n1 = keys1.n;
    const int64_t n2 = keys2.n;
    const int64_t n = n1 + n2;
    if (n < 1) throw std::invalid_argument("attend_two: no keys");
    const T scale = T(1) / std::sqrt(static_cast<T>(head_dim));

    for (int64_t i = 0; i < n1; ++i) probs[i] = detail::dot(q, keys1.row(i), head_dim) * scale;
    for (int64_t i = 0; i < n2; ++i)
        probs[n1 + i] = detail::dot(q, keys2.row(i), head_dim) * scale;
    detail::softmax_inplace(probs, n);

    for (int64_t j = 0; j < head_dim; ++j) out[j] = T(0);
    for (int64_t i = 0; i < n1; ++i) {
        const T* v = vals1.row(i);
        const T w = probs[i];
        for (int64_t j = 0; j < head_dim; ++j) out[j] += w * v[j];
    }
    for (int64_t i = 0; i < n2; ++i) {
        const T* v = vals2.row(i);
        const T w = probs[n1 + i];
        for (int64_t j = 0; j < head_dim; ++j) out[j] += w * v[j];
    }
}

// Reverse of attend_two; all gradient sinks are accumulated (+=). Null
// MutRowsView bases are skipped, and `probs` are the weights produced by the
// forward call.
template <class T>
void attend_two_backward(const T* q, RowsView<T> keys1, RowsView<T> vals1, RowsView<T> keys2,
                         RowsView<T> vals2, int64_t head_dim, const T* probs, const T* d_out,
                         T* d_q, MutRowsView<T> d_keys1, MutRowsView<T> d_vals1,
                         MutRowsView<T> d_keys2, MutRowsView<T> d_vals2,
                         std::vector<T>& scratch) {
    const int64_t n1 = keys1.n;
    const int64_t n2 = keys2.n;
    const int64_t n = n1 + n2;
    const T scale = T(1) / std::sqrt(static_cast<T>(head_dim));

    scratch.resize(static_cast<size_t>(n));
    T* dw = scratch.data();
    for (int64_t i = 0; i < n1; ++i) dw[i] = detail::dot(d_out, vals1.row(i), head_dim);
    for (int64_t i = 0; i < n2; ++i) dw[n1 + i] = detail::dot(d_out, vals2.row(i), head_dim);

    T s = T(0);
    for (int64_t i = 0; i < n; ++i) s += probs[i] * dw[i];

    for (int64_t i = 0; i < n; ++i) {
        const T dz = probs[i] * (dw[i] - s) * scale;
        const bool first = i < n1;
        const T* k = first ? keys1.row(i) : keys2.row(i - n1);
        if (d_q != nullptr) {
            for (int64_t j = 0; j < head_dim; ++j) d_q[j] += dz * k[j];
        }
        T* dk = first ? (d_keys1.base != nullptr ? d_keys1.row(i) : nullptr)
                      : (d_keys2.base != nullptr ? d_keys2.row(i - n1) : nullptr);
        if (dk != nullptr) {
            for (int64_t j = 0; j < head_dim; ++j) dk[j] += dz * q[j];
        }
        T* dv = first ? (d_vals1.base != nullptr ? d_vals1.row(i) : nullptr)
                      : (d_vals2.base != nullptr ? d_vals2.row(i - n1) : nullptr);
        if (dv != nullptr) {
            const T w = probs[i];
            for (int64_t j = 0; j < head_dim; ++j) dv[j] += w * d_out[j];
        }
    }
}

// One-head chunk compression: convex weights over the chunk rows, shared by
// keys and values. query == nullptr selects mean pooling; otherwise weights
// are softmax(query . key_i / sqrt(head_dim)). `w` receives the weights.
template <class T>
void pool_chunk(RowsView<T> keys, RowsView<T> vals, const T* query, int64_t head_dim, T* k_hat,
                T* v_hat, T* w) {
    const int64_t c = keys.n;
    if (c < 1) throw std::invalid_argument("pool_chunk: empty chunk");

    if (query == nullptr) {
        const T u = T(1) / static_cast<T>(c);
        for (int64_t i = 0; i < c; ++i) w[i] = u;
    } else {
        const T scale = T(1) / std::sqrt(static_cast<T>(head_dim));
        for (int64_t i = 0; i < c; ++i) w[i] = detail::dot(query, keys.row(i), head_dim) * scale;
        detail::softmax_inplace(w, c);
    }

    for (int64_t j = 0; j < head_dim; ++j) {
        k_hat[j] = T(0);
        v_hat[j] = T(0);
    }
    for (int64_t i = 0; i < c; ++i) {
        const T* k = keys.row(i);
        const T* v = vals.row(i);
        const T wi = w[i];
        for (int64_t j = 0; j < head_dim; ++j) {
            k_hat[j] += wi * k[j];
            v_hat[j] += wi * v[j];
        }
    }
}

// Reverse of pool_chunk; accumulates into d_keys / d_vals / d_query.
template <class T>
void pool_chunk_backward(RowsView<T> keys, RowsView<T> vals, const T* query, int64_t head_dim,
                         const T* w, const T* d_k_hat, const T* d_v_hat, MutRowsView<T> d_keys,
                         MutRowsView<T> d_vals, T* d_query, std::vector<T>& scratch) {
    const int64_t c = keys.n;

    // Direct path through the convex combination.
    for (int64_t i = 0; i < c; ++i) {
        const T wi = w[i];
        if (d_keys.base != nullptr) {
            T* dk = d_keys.row(i);
            for (int64_t j = 0; j < head_dim; ++j) dk[j] += wi * d_k_hat[j];
        }
        if (d_vals.base != nullptr) {
            T* dv = d_vals.row(i);
            for (int64_t j = 0; j < head_dim; ++j) dv[j] += wi * d_v_hat[j];
        }
    }
    if (query == nullptr) return;  // mean weights are constant

    scratch.resize(static_cast<size_t>(c));
    T* dw = scratch.data();
    for (int64_t i = 0; i < c; ++i) {
        dw[i] = detail::dot(d_k_hat, keys.row(i), head_dim) +
                detail::dot(d_v_hat, vals.row(i), head_dim);
    }
    T s = T(0);
    for (int64_t i = 0; i < c; ++i) s += w[i] * dw[i];

    const T scale = T(1) / std::sqrt(static_cast<T>(head_dim));
    for (int64_t i = 0; i < c; ++i) {
        const T dz = w[i] * (dw[i] - s) * scale;
        if (d_query != nullptr) {
            const T* k = keys.row(i);
            for (int64_t j = 0; j < head_dim; ++j) d_query[j] += dz * k[j];
        }
        if (d_keys.base != nullptr) {
            T* dk = d_keys.row(i);
            for (int64_t j = 0; j < head_dim; ++j) dk[j] += dz * query[j];
        }
    }
}

}  // namespace evalm::attn
