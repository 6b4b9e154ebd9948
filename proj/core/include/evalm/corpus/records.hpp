#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evalm::corpus {

struct DocumentRecord {
    int64_t id = 0;
    std::string text;
    std::string source;   // subset tag
    int64_t priority = 0; // lower wins survivor selection
};

}  // namespace evalm::corpus
