#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

#include "evalm/util/matrix.hpp"

namespace evalm::attn {

// Position-table addressing. Circular wraps modulo the table size, so the
// lookup is total for every nonnegative index; clamped is the ablation
// stand-in for vanilla learned positions that stop at the table edge.
enum class PositionMode {
    kCircular,
    kClamped,
};

inline int64_t position_row(int64_t i, int64_t period, PositionMode mode) {
    if (i < 0) throw std::invalid_argument("position index must be nonnegative");
    if (mode == PositionMode::kCircular) return i % period;
    return i < period ? i : period - 1;
}

// Learned positional-embedding table with wrap-around lookup.
struct CpeTable {
    util::Mat<float> embeddings;  // cpe_period x model_dim

    int64_t period() const { return embeddings.rows; }

    std::span<const float> lookup(int64_t i, PositionMode mode = PositionMode::kCircular) const {
        return embeddings.row(position_row(i, period(), mode));
    }
};

}  // namespace evalm::attn
