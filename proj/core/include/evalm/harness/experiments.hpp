#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evalm/icl/score.hpp"
#include "evalm/icl/task.hpp"
#include "evalm/lm/model.hpp"
#include "evalm/lm/tokenizer.hpp"

namespace evalm::harness {

// The reference shot grid used when a sweep does not override it.
const std::vector<int64_t>& default_shot_grid();

void write_manifest(const std::string& out_dir, uint64_t config_digest,
                    std::span<const uint64_t> seeds);

std::string code_version();

// ---------------------------------------------------------------- icl sweep

struct SweepOptions {
    const lm::Model* model = nullptr;
    const lm::Tokenizer* tokenizer = nullptr;
    icl::TaskSpec task;
    const icl::TaskData* data = nullptr;
    std::vector<int64_t> shot_grid;  // strictly increasing, starts at 0
    uint64_t seed = 0;
    std::string selector = "random";  // random (dataset-level) | topk (instance-level)
    bool reuse = true;                // conditional scoring against a cached context
    std::string out_dir;
    int64_t max_eval_samples = 0;  // 0 = all
};

struct SweepCell {
    int64_t k = 0;
    int64_t context_tokens = 0;
    double val_accuracy = 0.0;
    double wall_ms_per_sample = 0.0;
    int64_t state_rows = 0;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    int64_t best_k = 0;
    int64_t best_context_tokens = 0;
    double test_accuracy = 0.0;
    std::string csv_path;
};

SweepResult run_icl_sweep(const SweepOptions& opts);

// ------------------------------------------------------------ extrapolation

struct ExtrapolationOptions {
    const lm::Model* model = nullptr;
    std::span<const int32_t> stream;
    std::vector<int64_t> buckets;  // empty -> {L/4, L/2, L, 2L, 4L, 8L}
    std::string out_dir;
};

struct ExtrapolationRow {
    int64_t length = 0;
    double ppl = 0.0;
};

struct ExtrapolationResult {
    std::vector<ExtrapolationRow> rows;
    bool truncated = false;  // buckets beyond the stream were dropped
    std::string csv_path;
};

ExtrapolationResult run_extrapolation(const ExtrapolationOptions& opts);

// ------------------------------------------------------------- reuse timing

struct ReuseBenchOptions {
    const lm::Model* model = nullptr;
    const lm::Tokenizer* tokenizer = nullptr;
    icl::TaskSpec task;
    const icl::TaskData* data = nullptr;
    std::vector<int64_t> shot_grid;
    uint64_t seed = 0;
    int64_t repetitions = 5;  // median over these
    int64_t max_samples = 0;  // 0 = all test samples
    std::string out_dir;
};

struct ReuseBenchCell {
    int64_t k = 0;
    int64_t context_tokens = 0;
    double encode_ms = 0.0;          // one-time context encoding cost
    double reuse_ms_per_sample = 0.0;
    double noreuse_ms_per_sample = 0.0;
};

struct ReuseBenchResult {
    std::vector<ReuseBenchCell> cells;
    std::string csv_path;
};

ReuseBenchResult bench_reuse(const ReuseBenchOptions& opts);

// ------------------------------------------------------------- state growth

struct StateBenchOptions {
    const lm::Model* model = nullptr;
    std::vector<int64_t> t_grid;  // empty -> geometric up to 32 x train length
    uint64_t seed = 0;
    std::string out_dir;
};

struct StateBenchRow {
    int64_t t = 0;
    int64_t rows_local = 0;
    int64_t rows_remote = 0;
    int64_t bytes_estimate = 0;
};

struct StateBenchResult {
    std::vector<StateBenchRow> rows;
    std::string csv_path;
};

StateBenchResult bench_state(const StateBenchOptions& opts);

}  // namespace evalm::harness
