#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evalm::lm {

// Pluggable tokenization. Byte level covers the scoring paths (it is
// concatenation-safe: encode(a+b) == encode(a) + encode(b)); word level
// builds a frequency-capped vocabulary from a corpus.
class Tokenizer {
public:
    enum class Mode { kByte, kWord };

    static Tokenizer byte_level();
    // Vocabulary: id 0 = <unk>, id 1 = <bos>, then the most frequent
    // whitespace tokens (ties broken lexicographically), capped at max_vocab.
    static Tokenizer word_level(std::span<const std::string> corpus, int64_t max_vocab);

    std::vector<int32_t> encode(std::string_view text, bool add_bos = false) const;
    std::string decode(std::span<const int32_t> ids) const;

    Mode mode() const { return mode_; }
    int32_t bos_id() const { return bos_id_; }
    int64_t vocab_size() const { return vocab_size_; }

    void save(const std::string& path) const;
    static Tokenizer load(const std::string& path);

private:
    Mode mode_ = Mode::kByte;
    int32_t bos_id_ = 256;
    int64_t vocab_size_ = 257;
    std::map<std::string, int32_t> word_to_id_;
    std::vector<std::string> id_to_word_;
};

}  // namespace evalm::lm
