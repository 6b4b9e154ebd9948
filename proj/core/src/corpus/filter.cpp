#include "evalm/corpus/filter.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_set>

namespace evalm::corpus {

namespace {

void check_ratio(double v, const char* name) {
    if (v < 0.0 || v > 1.0)
        throw std::invalid_argument(std::string("FilterRules: ") + name + " must be in [0, 1]");
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && text[i] == ' ') ++i;
        size_t j = i;
        while (j < text.size() && text[j] != ' ') ++j;
        if (j > i) out.push_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string lower(std::string s) {
    for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

}  // namespace

void FilterRules::validate() const {
    check_ratio(flagged_word_ratio_max, "flagged_word_ratio_max");
    check_ratio(stop_word_ratio_min, "stop_word_ratio_min");
    check_ratio(word_repetition_ratio_max, "word_repetition_ratio_max");
    check_ratio(char_repetition_ratio_max, "char_repetition_ratio_max");
    check_ratio(specific_char_ratio_max, "specific_char_ratio_max");
}

const std::vector<std::string>& builtin_stop_words() {
    static const std::vector<std::string> words = {
        "the", "of", "and", "a", "to", "in", "is", "it", "that", "he",  "she", "was",
        "for", "on", "are", "as", "with", "his", "her", "they", "at",  "be",  "this",
        "have", "from", "or", "had", "by", "not", "but", "what", "all", "were", "we",
        "when", "your", "can", "said", "there", "an", "which", "their", "if", "do"};
    return words;
}

std::string normalize_text(const std::string& text, const FilterRules& rules) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char ch : text) {
        if (rules.strip_non_ascii && ch >= 0x80) continue;
        const bool ws = std::isspace(ch) != 0;
        if (rules.normalize_whitespace) {
            if (ws) {
                pending_space = !out.empty();
                continue;
            }
            if (pending_space) {
                out.push_back(' ');
                pending_space = false;
            }
            out.push_back(static_cast<char>(ch));
        } else {
            out.push_back(static_cast<char>(ch));
        }
    }
    return out;
}

FilterDecision filter_document(const std::string& text, const FilterRules& rules) {
    rules.validate();
    FilterDecision d;
    d.normalized_text = normalize_text(text, rules);

    if (d.normalized_text.empty()) {
        d.reason = "empty";
        return d;
    }

    const std::vector<std::string> words = tokenize(d.normalized_text);
    if (words.empty()) {
        d.reason = "empty";
        return d;
    }
    const double nwords = static_cast<double>(words.size());

    if (!rules.flagged_words.empty()) {
        std::unordered_set<std::string> flagged(rules.flagged_words.begin(),
                                                rules.flagged_words.end());
        int64_t hits = 0;
        for (const auto& w : words) {
            if (flagged.count(lower(w))) ++hits;
        }
        if (static_cast<double>(hits) / nwords > rules.flagged_word_ratio_max) {
            d.reason = "flagged-word";
            return d;
        }
    }

    if (rules.stop_word_ratio_min > 0.0) {
        const auto& sw = rules.stop_words.empty() ? builtin_stop_words() : rules.stop_words;
        std::unordered_set<std::string> stop(sw.begin(), sw.end());
        int64_t hits = 0;
        for (const auto& w : words) {
            if (stop.count(lower(w))) ++hits;
        }
        if (static_cast<double>(hits) / nwords < rules.stop_word_ratio_min) {
            d.reason = "stop-word-ratio";
            return d;
        }
    }

    {
        std::unordered_set<std::string> distinct(words.begin(), words.end());
        const double rep = 1.0 - static_cast<double>(distinct.size()) / nwords;
        if (rep > rules.word_repetition_ratio_max) {
            d.reason = "word-repetition-ratio";
            return d;
        }
    }

    if (d.normalized_text.size() >= 3) {
        std::unordered_set<std::string> grams;
        const std::string& s = d.normalized_text;
        for (size_t i = 0; i + 3 <= s.size(); ++i) grams.insert(s.substr(i, 3));
        const double total = static_cast<double>(s.size() - 2);
        const double rep = 1.0 - static_cast<double>(grams.size()) / total;
        if (rep > rules.char_repetition_ratio_max) {
            d.reason = "char-repetition-ratio";
            return d;
        }
    }

    {
        int64_t specific = 0;
        int64_t total = 0;
        for (unsigned char ch : d.normalized_text) {
            if (ch == ' ') continue;
            ++total;
            if (!std::isalnum(ch)) ++specific;
        }
        if (total > 0 &&
            static_cast<double>(specific) / static_cast<double>(total) >
                rules.specific_char_ratio_max) {
            d.reason = "specific-char-ratio";
            return d;
        }
    }

    d.keep = true;
    return d;
}

}  // namespace evalm::corpus
