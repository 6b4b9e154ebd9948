#include "evalm/icl/pack.hpp"

#include <iostream>
#include <stdexcept>
#include <string>

namespace evalm::icl {

PackResult pack_msit(std::span<const int64_t> exemplar_token_lengths, int64_t budget,
                     const std::function<void(const std::string&)>& warn) {
    if (budget < 1) throw std::invalid_argument("pack_msit: budget must be >= 1");
    auto emit_warning = [&](const std::string& msg) {
        if (warn) {
            warn(msg);
        } else {
            std::cerr << "pack_msit: " << msg << "\n";
        }
    };

    PackResult result;
    PackedLine current;
    for (int64_t i = 0; i < static_cast<int64_t>(exemplar_token_lengths.size()); ++i) {
        const int64_t len = exemplar_token_lengths[static_cast<size_t>(i)];
        if (len < 0) throw std::invalid_argument("pack_msit: negative exemplar length");
        if (len > budget) {
            result.skipped.push_back(i);
            emit_warning("exemplar " + std::to_string(i) + " (" + std::to_string(len) +
                         " tokens) exceeds budget " + std::to_string(budget) + ", skipped");
            continue;
        }
        if (current.token_len + len > budget) {
            result.lines.push_back(std::move(current));
            current = {};
        }
        current.exemplar_indices.push_back(i);
        current.token_len += len;
    }
    if (!current.exemplar_indices.empty()) result.lines.push_back(std::move(current));
    return result;
}

}  // namespace evalm::icl
