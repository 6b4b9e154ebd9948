#include "evalm/corpus/blend.hpp"

#include <algorithm>
#include <stdexcept>

#include "evalm/util/hash.hpp"
#include "evalm/util/rng.hpp"

namespace evalm::corpus {

std::vector<DocumentRecord> blend_batches(std::span<const DocumentRecord> docs,
                                          const std::map<std::string, double>& source_weights,
                                          uint64_t seed, int64_t shard_size) {
    if (shard_size < 1) throw std::invalid_argument("blend_batches: shard_size must be >= 1");
    double total_weight = 0.0;
    for (const auto& [src, w] : source_weights) {
        if (w < 0.0) throw std::invalid_argument("blend_batches: negative weight for " + src);
        total_weight += w;
    }
    if (total_weight <= 0.0)
        throw std::invalid_argument("blend_batches: all source weights are zero");

    // Per-source queues, each in seeded-shuffle order.
    std::vector<std::string> sources;
    std::map<std::string, std::vector<int64_t>> queues;
    for (const auto& [src, w] : source_weights) {
        if (w > 0.0) {
            sources.push_back(src);
            queues[src] = {};
        }
    }
    for (int64_t i = 0; i < static_cast<int64_t>(docs.size()); ++i) {
        auto it = queues.find(docs[static_cast<size_t>(i)].source);
        if (it != queues.end()) it->second.push_back(i);
    }
    for (auto& [src, q] : queues) {
        util::Rng rng = util::Rng::derive(seed, {0x31u, util::fnv1a64(src)});
        rng.shuffle(q);
    }
    std::map<std::string, size_t> cursor;
    for (const auto& s : sources) cursor[s] = 0;

    auto remaining = [&](const std::string& s) {
        return static_cast<int64_t>(queues[s].size() - cursor[s]);
    };

    std::vector<DocumentRecord> out;
    out.reserve(docs.size());
    util::Rng shard_rng = util::Rng::derive(seed, {0x32u});
    int64_t left = 0;
    for (const auto& s : sources) left += remaining(s);
    while (left > 0) {
        const int64_t want = std::min(shard_size, left);

        // Largest-remainder quotas over sources that still have documents,
        // weights renormalized over them.
        std::vector<std::string> live;
        double live_weight = 0.0;
        for (const auto& s : sources) {
            if (remaining(s) > 0) {
                live.push_back(s);
                live_weight += source_weights.at(s);
            }
        }
        std::vector<int64_t> quota(live.size(), 0);
        std::vector<std::pair<double, size_t>> frac;
        int64_t assigned = 0;
        for (size_t i = 0; i < live.size(); ++i) {
            const double exact =
                static_cast<double>(want) * source_weights.at(live[i]) / live_weight;
            quota[i] = std::min<int64_t>(static_cast<int64_t>(exact), remaining(live[i]));
            assigned += quota[i];
            frac.emplace_back(exact - static_cast<double>(quota[i]), i);
        }
        std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        // Distribute the remainder by descending fractional part, spilling
        // to any source with documents left.
        size_t fi = 0;
        while (assigned < want) {
            bool placed = false;
            for (size_t tries = 0; tries < frac.size(); ++tries) {
                const size_t i = frac[fi % frac.size()].second;
                ++fi;
                if (quota[i] < remaining(live[i])) {
                    ++quota[i];
                    ++assigned;
                    placed = true;
                    break;
                }
            }
            if (!placed) break;
        }

        std::vector<DocumentRecord> shard;
        shard.reserve(static_cast<size_t>(want));
        for (size_t i = 0; i < live.size(); ++i) {
            auto& q = queues[live[i]];
            auto& cur = cursor[live[i]];
            for (int64_t j = 0; j < quota[i]; ++j)
                shard.push_back(docs[static_cast<size_t>(q[cur++])]);
        }
        shard_rng.shuffle(shard);
        for (auto& doc : shard) out.push_back(std::move(doc));

        left = 0;
        for (const auto& s : sources) left += remaining(s);
    }
    return out;
}

}  // namespace evalm::corpus
