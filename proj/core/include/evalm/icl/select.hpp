#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "evalm/icl/task.hpp"
#include "evalm/util/jsonl.hpp"

namespace evalm::icl {

struct DemonstrationSet {
    std::vector<util::JsonRecord> exemplars;  // order as drawn / rank order
    int64_t k = 0;
    std::string selector;
    uint64_t seed_or_query = 0;
};

// Deterministic text embedder interface for instance-level selection.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

// Dependency-free built-in: L2-normalized mean of hashed character-trigram
// counts. Deterministic across runs and platforms.
class TrigramEmbedder : public Embedder {
public:
    explicit TrigramEmbedder(int64_t dim = 256) : dim_(dim) {}
    std::vector<double> embed(std::string_view text) const override;

private:
    int64_t dim_;
};

// Dataset-level selection: k distinct exemplars drawn uniformly without
// replacement, in draw order; shared by the whole test set.
DemonstrationSet select_random(std::span<const util::JsonRecord> train_split, int64_t k,
                               uint64_t seed);

// Instance-level selection: the k nearest training exemplars by cosine
// similarity on the task's input fields, ordered least-similar first so the
// most similar exemplar sits adjacent to the test input. Ties break toward
// the lower training index.
DemonstrationSet select_topk(const TaskSpec& task, std::span<const util::JsonRecord> train_split,
                             const util::JsonRecord& test_input, int64_t k,
                             const Embedder& embedder);

// The text handed to the embedder: input fields joined by newlines in the
// task's schema order.
std::string embedding_text(const TaskSpec& task, const util::JsonRecord& record);

}  // namespace evalm::icl
