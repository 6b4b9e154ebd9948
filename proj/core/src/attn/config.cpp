#include "evalm/attn/config.hpp"

namespace evalm::attn {

std::string to_string(PoolingMode mode) {
    switch (mode) {
        case PoolingMode::kLearnedQuery: return "learned-query";
        case PoolingMode::kMean: return "mean";
    }
    throw std::logic_error("unknown PoolingMode");
}

PoolingMode pooling_mode_from_string(const std::string& s) {
    if (s == "learned-query") return PoolingMode::kLearnedQuery;
    if (s == "mean") return PoolingMode::kMean;
    throw std::invalid_argument("unknown pooling mode: " + s);
}

ChunkPartition chunk_partition(int64_t t, int64_t chunk_size) {
    if (t < 1) throw std::invalid_argument("chunk_partition: t must be >= 1");
    if (chunk_size < 1) throw std::invalid_argument("chunk_partition: chunk_size must be >= 1");

    const int64_t full_chunks = (t - 1) / chunk_size;
    ChunkPartition part;
    part.remote_ranges.reserve(static_cast<size_t>(full_chunks));
    for (int64_t j = 0; j < full_chunks; ++j) {
        part.remote_ranges.push_back({j * chunk_size + 1, (j + 1) * chunk_size});
    }
    part.local_range = {full_chunks * chunk_size + 1, t};
    return part;
}

}  // namespace evalm::attn
