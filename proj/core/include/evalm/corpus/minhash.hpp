#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace evalm::corpus {

inline constexpr int64_t kSignatureSlots = 100;

// MinHash signature over the document's word-unigram set: slot j is the
// minimum of the j-th seeded 64-bit hash over the tokens. The matching-slot
// fraction between two signatures estimates their exact unigram Jaccard.
struct Signature {
    std::array<uint64_t, kSignatureSlots> slots{};
};

Signature minhash_signature(const std::string& text, uint64_t seed);

double estimate_similarity(const Signature& a, const Signature& b);

}  // namespace evalm::corpus
