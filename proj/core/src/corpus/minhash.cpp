#include "evalm/corpus/minhash.hpp"

#include <cctype>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "evalm/util/hash.hpp"
#include "evalm/util/rng.hpp"

namespace evalm::corpus {

namespace {

// Per-slot mixing constants derived from the run seed. Multiply-shift over a
// stable string hash keeps signatures reproducible across platforms.
struct SlotHashes {
    std::array<uint64_t, kSignatureSlots> mult;
    std::array<uint64_t, kSignatureSlots> add;
};

SlotHashes make_slot_hashes(uint64_t seed) {
    SlotHashes h;
    uint64_t s = seed ^ 0x6d696e68617368ull;  // domain separation for the hash family
    for (int64_t j = 0; j < kSignatureSlots; ++j) {
        h.mult[static_cast<size_t>(j)] = util::splitmix64(s) | 1ull;  // odd multiplier
        h.add[static_cast<size_t>(j)] = util::splitmix64(s);
    }
    return h;
}

}  // namespace

Signature minhash_signature(const std::string& text, uint64_t seed) {
    std::unordered_set<uint64_t> unigrams;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) unigrams.insert(util::fnv1a64(std::string_view(text).substr(i, j - i)));
        i = j;
    }
    if (unigrams.empty())
        throw std::invalid_argument("minhash_signature: no tokens after whitespace tokenization");

    const SlotHashes h = make_slot_hashes(seed);
    Signature sig;
    sig.slots.fill(std::numeric_limits<uint64_t>::max());
    for (uint64_t u : unigrams) {
        for (int64_t j = 0; j < kSignatureSlots; ++j) {
            const size_t k = static_cast<size_t>(j);
            uint64_t v = u * h.mult[k] + h.add[k];
            v ^= v >> 33;
            v *= 0xff51afd7ed558ccdull;
            v ^= v >> 33;
            if (v < sig.slots[k]) sig.slots[k] = v;
        }
    }
    return sig;
}

double estimate_similarity(const Signature& a, const Signature& b) {
    int64_t match = 0;
    for (int64_t j = 0; j < kSignatureSlots; ++j) {
        if (a.slots[static_cast<size_t>(j)] == b.slots[static_cast<size_t>(j)]) ++match;
    }
    return static_cast<double>(match) / static_cast<double>(kSignatureSlots);
}

}  // namespace evalm::corpus
