#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace evalm::util {

// Dense row-major matrix. Deliberately minimal: the kernels index rows
// explicitly and never need expression templates.
template <class T>
struct Mat {
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(int64_t r, int64_t c, T fill = T{})
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

    T& operator()(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols + c)]; }
    const T& operator()(int64_t r, int64_t c) const {
        return data[static_cast<size_t>(r * cols + c)];
    }

    T* row_ptr(int64_t r) { return data.data() + r * cols; }
    const T* row_ptr(int64_t r) const { return data.data() + r * cols; }

    std::span<T> row(int64_t r) { return {row_ptr(r), static_cast<size_t>(cols)}; }
    std::span<const T> row(int64_t r) const { return {row_ptr(r), static_cast<size_t>(cols)}; }

    int64_t size() const { return rows * cols; }
    bool empty() const { return rows == 0 || cols == 0; }

    void zero() { std::fill(data.begin(), data.end(), T{}); }

    // Appends one row; `src` must hold `cols` values (cols must be set).
    void push_row(std::span<const T> src) {
        data.insert(data.end(), src.begin(), src.end());
        ++rows;
    }

    void clear_rows() {
        data.clear();
        rows = 0;
    }
};

template <class T, class U>
Mat<T> cast_mat(const Mat<U>& m) {
    Mat<T> out(m.rows, m.cols);
    for (int64_t i = 0; i < m.size(); ++i) out.data[static_cast<size_t>(i)] = static_cast<T>(m.data[static_cast<size_t>(i)]);
    return out;
}

}  // namespace evalm::util
