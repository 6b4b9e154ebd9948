#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evalm/corpus/records.hpp"

namespace evalm::corpus {

// Seeded heterogeneous blending: documents are interleaved so each shard of
// `shard_size` matches the source weights (largest-remainder quotas, shard
// contents shuffled). Zero-weight sources contribute nothing; quotas of
// exhausted sources are redistributed over the remaining ones.
std::vector<DocumentRecord> blend_batches(std::span<const DocumentRecord> docs,
                                          const std::map<std::string, double>& source_weights,
                                          uint64_t seed, int64_t shard_size = 10000);

}  // namespace evalm::corpus
