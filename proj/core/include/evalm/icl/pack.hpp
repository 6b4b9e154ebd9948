#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace evalm::icl {

struct PackedLine {
    std::vector<int64_t> exemplar_indices;  // input order
    int64_t token_len = 0;
};

struct PackResult {
    std::vector<PackedLine> lines;
    std::vector<int64_t> skipped;  // exemplars longer than the budget
};

// Greedy first-fit packing of rendered exemplars (given as token lengths) in
// input order: a line closes when the next exemplar would overflow the
// budget. Oversize exemplars are skipped with a warning; nothing is split.
PackResult pack_msit(std::span<const int64_t> exemplar_token_lengths, int64_t budget,
                     const std::function<void(const std::string&)>& warn = {});

}  // namespace evalm::icl
