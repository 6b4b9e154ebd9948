#include "evalm/icl/select.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evalm/util/hash.hpp"
#include "evalm/util/rng.hpp"

namespace evalm::icl {

std::vector<double> TrigramEmbedder::embed(std::string_view text) const {
    std::vector<double> v(static_cast<size_t>(dim_), 0.0);
    if (text.size() >= 3) {
        for (size_t i = 0; i + 3 <= text.size(); ++i) {
            const uint64_t h = util::fnv1a64(text.substr(i, 3));
            v[static_cast<size_t>(h % static_cast<uint64_t>(dim_))] += 1.0;
        }
        const double n = static_cast<double>(text.size() - 2);
        for (double& x : v) x /= n;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return v;
}

DemonstrationSet select_random(std::span<const util::JsonRecord> train_split, int64_t k,
                               uint64_t seed) {
    const int64_t n = static_cast<int64_t>(train_split.size());
    if (k < 0 || k > n)
        throw std::invalid_argument("select_random: k out of range [0, train size]");

    std::vector<int64_t> idx(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    util::Rng rng = util::Rng::derive(seed, {0x2bu});
    DemonstrationSet out;
    out.k = k;
    out.selector = "random";
    out.seed_or_query = seed;
    for (int64_t i = 0; i < k; ++i) {
        const int64_t j = i + rng.uniform_int(n - i);
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
        out.exemplars.push_back(train_split[static_cast<size_t>(idx[static_cast<size_t>(i)])]);
    }
    return out;
}

std::string embedding_text(const TaskSpec& task, const util::JsonRecord& record) {
    std::string out;
    for (const auto& field : task.fields) {
        if (!record.has(field)) continue;
        if (!out.empty()) out.push_back('\n');
        out += record.at(field);
    }
    return out;
}

DemonstrationSet select_topk(const TaskSpec& task, std::span<const util::JsonRecord> train_split,
                             const util::JsonRecord& test_input, int64_t k,
                             const Embedder& embedder) {
    const int64_t n = static_cast<int64_t>(train_split.size());
    if (k < 1 || k > n) throw std::invalid_argument("select_topk: k out of range [1, train size]");

    const std::vector<double> qe = embedder.embed(embedding_text(task, test_input));
    std::vector<std::pair<double, int64_t>> scored(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        const std::vector<double> e =
            embedder.embed(embedding_text(task, train_split[static_cast<size_t>(i)]));
        double dot = 0.0;
        for (size_t j = 0; j < e.size() && j < qe.size(); ++j) dot += e[j] * qe[j];
        scored[static_cast<size_t>(i)] = {dot, i};  // embeddings are unit-norm: dot == cosine
    }
    // Rank best first: higher similarity, then lower training index.
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    DemonstrationSet out;
    out.k = k;
    out.selector = "topk";
    out.seed_or_query = util::fnv1a64(embedding_text(task, test_input));
    // Emit least similar first so rank 1 lands adjacent to the test input.
    for (int64_t r = k - 1; r >= 0; --r)
        out.exemplars.push_back(train_split[static_cast<size_t>(scored[static_cast<size_t>(r)].second)]);
    return out;
}

}  // namespace evalm::icl
