#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace evalm::corpus {

// Content-filter thresholds. Rules run in a fixed order after normalization:
// empty, flagged words, stop-word ratio, word repetition, character
// repetition, specific-character ratio; the first failure names the reject
// reason. Threshold defaults are this artifact's choices.
struct FilterRules {
    bool normalize_whitespace = true;   // collapse runs of whitespace to one space
    bool strip_non_ascii = true;        // drop bytes >= 0x80
    std::vector<std::string> flagged_words;
    double flagged_word_ratio_max = 0.0;     // any flagged token rejects by default
    double stop_word_ratio_min = 0.0;        // reject below this
    double word_repetition_ratio_max = 1.0;  // 1 - distinct/total words
    double char_repetition_ratio_max = 1.0;  // 1 - distinct/total char trigrams
    double specific_char_ratio_max = 1.0;    // non-alphanumeric, non-space chars
    std::vector<std::string> stop_words;     // empty -> builtin English list

    void validate() const;
};

struct FilterDecision {
    bool keep = false;
    std::string reason;           // empty when kept
    std::string normalized_text;  // post-normalization text
};

FilterDecision filter_document(const std::string& text, const FilterRules& rules);

// Normalization alone (whitespace standardization + non-ASCII stripping).
std::string normalize_text(const std::string& text, const FilterRules& rules);

const std::vector<std::string>& builtin_stop_words();

}  // namespace evalm::corpus
