#include "evalm/corpus/dedup.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "evalm/util/hash.hpp"

namespace evalm::corpus {

namespace {

struct UnionFind {
    std::vector<int64_t> parent;

    explicit UnionFind(int64_t n) : parent(static_cast<size_t>(n)) {
        for (int64_t i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
    }
    int64_t find(int64_t x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    }
    void unite(int64_t a, int64_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a > b) std::swap(a, b);  // keep the lowest index as root
        parent[static_cast<size_t>(b)] = a;
    }
};

}  // namespace

DedupResult dedup_cluster(std::span<const Signature> signatures,
                          std::span<const DocumentRecord> docs, double threshold) {
    const int64_t n = static_cast<int64_t>(signatures.size());
    if (n < 1) throw std::invalid_argument("dedup_cluster: need at least one signature");
    if (docs.size() != signatures.size())
        throw std::invalid_argument("dedup_cluster: docs/signatures size mismatch");
    static_assert(kLshBands * kLshRowsPerBand == kSignatureSlots);

    // Band buckets -> candidate pairs, verified against the full signature.
    UnionFind uf(n);
    DedupResult result;
    std::vector<std::pair<int64_t, int64_t>> checked;  // dedup of candidate pairs
    for (int64_t band = 0; band < kLshBands; ++band) {
        std::unordered_map<uint64_t, std::vector<int64_t>> buckets;
        for (int64_t i = 0; i < n; ++i) {
            util::Fnv64 f;
            f.update_value(band);
            for (int64_t r = 0; r < kLshRowsPerBand; ++r)
                f.update_value(
                    signatures[static_cast<size_t>(i)].slots[static_cast<size_t>(band * kLshRowsPerBand + r)]);
            buckets[f.digest()].push_back(i);
        }
        for (const auto& [key, members] : buckets) {
            for (size_t a = 0; a < members.size(); ++a) {
                for (size_t b = a + 1; b < members.size(); ++b) {
                    checked.emplace_back(members[a], members[b]);
                }
            }
        }
    }
    std::sort(checked.begin(), checked.end());
    checked.erase(std::unique(checked.begin(), checked.end()), checked.end());

    for (const auto& [a, b] : checked) {
        if (estimate_similarity(signatures[static_cast<size_t>(a)],
                                signatures[static_cast<size_t>(b)]) > threshold) {
            uf.unite(a, b);
            result.duplicate_pairs.emplace_back(a, b);
        }
    }

    result.component.resize(static_cast<size_t>(n));
    result.survivor.assign(static_cast<size_t>(n), false);
    result.survivor_of.resize(static_cast<size_t>(n));

    // Survivor per component: lowest priority rank, ties by lowest id.
    std::unordered_map<int64_t, int64_t> best;
    for (int64_t i = 0; i < n; ++i) {
        const int64_t root = uf.find(i);
        result.component[static_cast<size_t>(i)] = root;
        auto it = best.find(root);
        if (it == best.end()) {
            best[root] = i;
            continue;
        }
        const auto& cur = docs[static_cast<size_t>(it->second)];
        const auto& cand = docs[static_cast<size_t>(i)];
        if (cand.priority < cur.priority ||
            (cand.priority == cur.priority && cand.id < cur.id)) {
            it->second = i;
        }
    }
    result.num_components = static_cast<int64_t>(best.size());
    for (int64_t i = 0; i < n; ++i) {
        const int64_t s = best.at(result.component[static_cast<size_t>(i)]);
        result.survivor_of[static_cast<size_t>(i)] = s;
        result.survivor[static_cast<size_t>(i)] = (s == i);
    }
    return result;
}

}  // namespace evalm::corpus
