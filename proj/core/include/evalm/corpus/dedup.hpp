#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evalm/corpus/minhash.hpp"
#include "evalm/corpus/records.hpp"

namespace evalm::corpus {

// LSH banding over the 100-slot signatures; candidates are verified against
// the full signature, so banding only affects recall, never adds merges.
inline constexpr int64_t kLshBands = 20;
inline constexpr int64_t kLshRowsPerBand = 5;

struct DedupResult {
    std::vector<int64_t> component;    // per doc: component id (root doc index)
    std::vector<bool> survivor;        // per doc
    std::vector<int64_t> survivor_of;  // per doc: index of its component's survivor
    std::vector<std::pair<int64_t, int64_t>> duplicate_pairs;  // verified edges
    int64_t num_components = 0;
};

// Clusters near-duplicates: LSH proposes candidate pairs, pairs whose
// matching-slot fraction exceeds `threshold` become edges, connected
// components collapse to one survivor each (lowest priority rank, ties by
// lowest doc index).
DedupResult dedup_cluster(std::span<const Signature> signatures,
                          std::span<const DocumentRecord> docs, double threshold = 0.95);

}  // namespace evalm::corpus
