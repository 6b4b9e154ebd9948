#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evalm::attn {

// How a completed chunk is squeezed into one key/value pair. The mode is a
// model-lifetime property and is recorded in checkpoints.
enum class PoolingMode {
    kLearnedQuery,  // softmax over (pooling query . keys), weights shared by K and V
    kMean,          // uniform weights; kept as the oracle-friendly baseline
};

std::string to_string(PoolingMode mode);
PoolingMode pooling_mode_from_string(const std::string& s);

struct AttnConfig {
    int64_t model_dim = 0;
    int64_t num_heads = 0;
    int64_t chunk_size = 0;
    int64_t cpe_period = 0;  // maximum learned-position count; lookups wrap modulo this
    PoolingMode pooling_mode = PoolingMode::kLearnedQuery;

    int64_t head_dim() const { return model_dim / num_heads; }

    void validate() const {
        if (model_dim <= 0) throw std::invalid_argument("AttnConfig: model_dim must be positive");
        if (num_heads <= 0) throw std::invalid_argument("AttnConfig: num_heads must be positive");
        if (model_dim % num_heads != 0)
            throw std::invalid_argument("AttnConfig: num_heads must divide model_dim");
        if (chunk_size <= 0) throw std::invalid_argument("AttnConfig: chunk_size must be >= 1");
        if (cpe_period <= 0) throw std::invalid_argument("AttnConfig: cpe_period must be >= 1");
    }
};

// Closed 1-based index range [lo, hi].
struct IndexRange {
    int64_t lo = 0;
    int64_t hi = 0;

    int64_t length() const { return hi - lo + 1; }
    bool operator==(const IndexRange&) const = default;
};

// Partition of positions [1, t] into completed remote chunks plus the local
// (possibly partial) chunk that contains t.
struct ChunkPartition {
    std::vector<IndexRange> remote_ranges;  // each exactly chunk_size long
    IndexRange local_range;                 // length 1..chunk_size, contains t
};

// Splits the prefix [1, t] at chunk boundaries. The token at t stays local
// until its chunk completes, so t = k*c yields k-1 remote chunks.
ChunkPartition chunk_partition(int64_t t, int64_t chunk_size);

}  // namespace evalm::attn
