#include "evalm/harness/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

#include "evalm/harness/configfile.hpp"
#include "evalm/lm/perplexity.hpp"
#include "evalm/util/csv.hpp"
#include "evalm/util/rng.hpp"

namespace evalm::harness {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string resolve_out_dir(const std::string& requested) {
    std::string dir = output_dir_override();
    if (dir.empty()) dir = requested;
    if (dir.empty()) throw std::invalid_argument("experiment needs an output directory");
    std::filesystem::create_directories(dir);
    return dir;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void check_grid(const std::vector<int64_t>& grid) {
    if (grid.empty() || grid.front() != 0)
        throw std::invalid_argument("shot grid must start at 0");
    for (size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1])
            throw std::invalid_argument("shot grid must be strictly increasing");
    }
}

int64_t state_rows_for(int64_t t, int64_t c) { return t % c + t / c; }

}  // namespace

const std::vector<int64_t>& default_shot_grid() {
    static const std::vector<int64_t> grid = {0,   1,   3,   4,    8,    16,   32,   64,
                                              80,  128, 192, 256,  372,  512,  640,  768,
                                              896, 1024, 1280, 1536, 1792, 2000};
    return grid;
}

std::string code_version() { return "evalm 0.1.0"; }

void write_manifest(const std::string& out_dir, uint64_t config_digest,
                    std::span<const uint64_t> seeds) {
    nlohmann::json j;
    j["config_digest"] = config_digest;
    j["seeds"] = std::vector<uint64_t>(seeds.begin(), seeds.end());
    j["code_version"] = code_version();
    std::ofstream out(std::filesystem::path(out_dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + out_dir);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------- icl sweep

namespace {

struct EvalOutcome {
    double accuracy = 0.0;
    double ms_per_sample = 0.0;
    double mean_context_tokens = 0.0;
    int64_t state_rows = 0;
};

// Evaluates one (k, split) cell. Dataset-level selection shares a single
// cached context across the split; instance-level (topk) builds one per item
// and always scores jointly.
EvalOutcome eval_split(const SweepOptions& opts, int64_t k,
                       std::span<const util::JsonRecord> split) {
    const auto& model = *opts.model;
    const auto& tok = *opts.tokenizer;
    const int64_t c = model.config.attn.chunk_size;
    EvalOutcome out;

    int64_t correct = 0;
    const auto t0 = Clock::now();
    if (opts.selector == "topk" && k > 0) {
        icl::TrigramEmbedder embedder;
        double token_sum = 0.0;
        for (const auto& item : split) {
            auto demos = icl::select_topk(opts.task, std::span(opts.data->train), item, k,
                                          embedder);
            auto ctx = icl::build_context(model, tok, opts.task, demos);
            token_sum += static_cast<double>(ctx.token_count);
            auto pred = icl::predict(model, tok, ctx, opts.task, item, icl::ScoreMode::kJoint);
            if (item.has("label") && pred.label == item.at("label")) ++correct;
            out.state_rows = state_rows_for(ctx.token_count + 1, c);
        }
        out.mean_context_tokens = token_sum / static_cast<double>(split.size());
    } else {
        auto demos = icl::select_random(std::span(opts.data->train), k, opts.seed);
        auto ctx = icl::build_context(model, tok, opts.task, demos);
        out.mean_context_tokens = static_cast<double>(ctx.token_count);
        out.state_rows = state_rows_for(ctx.token_count + 1, c);
        const auto mode = opts.reuse ? icl::ScoreMode::kConditional : icl::ScoreMode::kJoint;
        for (const auto& item : split) {
            auto pred = icl::predict(model, tok, ctx, opts.task, item, mode);
            if (item.has("label") && pred.label == item.at("label")) ++correct;
        }
    }
    out.ms_per_sample = ms_since(t0) / static_cast<double>(split.size());
    out.accuracy = static_cast<double>(correct) / static_cast<double>(split.size());
    return out;
}

std::span<const util::JsonRecord> capped(const std::vector<util::JsonRecord>& v, int64_t cap) {
    const size_t n = cap > 0 ? std::min<size_t>(v.size(), static_cast<size_t>(cap)) : v.size();
    return {v.data(), n};
}

}  // namespace

SweepResult run_icl_sweep(const SweepOptions& opts) {
    if (opts.model == nullptr || opts.tokenizer == nullptr || opts.data == nullptr)
        throw std::invalid_argument("run_icl_sweep: missing model/tokenizer/data");
    check_grid(opts.shot_grid);
    if (opts.data->validation.empty()) throw std::runtime_error("run_icl_sweep: empty validation split");
    if (opts.data->test.empty()) throw std::runtime_error("run_icl_sweep: empty test split");

    const std::string dir = resolve_out_dir(opts.out_dir);
    const std::string csv_path = dir + "/icl_sweep_" + opts.task.name + "_" + opts.selector +
                                 "_seed" + std::to_string(opts.seed) +
                                 (opts.reuse ? "_reuse" : "_noreuse") + ".csv";
    util::CsvWriter csv(csv_path,
                        {"task", "selector", "k", "context_token_length", "metric_name",
                         "metric_value", "wall_time_ms_per_sample", "state_rows",
                         "reuse_enabled"});

    SweepResult result;
    const auto val = capped(opts.data->validation, opts.max_eval_samples);
    double best_acc = -1.0;
    for (int64_t k : opts.shot_grid) {
        if (k > static_cast<int64_t>(opts.data->train.size())) break;
        EvalOutcome cell = eval_split(opts, k, val);
        result.cells.push_back({k, static_cast<int64_t>(cell.mean_context_tokens),
                                cell.accuracy, cell.ms_per_sample, cell.state_rows});
        csv.row({opts.task.name, opts.selector, std::to_string(k),
                 util::fmt_double(cell.mean_context_tokens), "val_accuracy",
                 util::fmt_double(cell.accuracy), util::fmt_double(cell.ms_per_sample),
                 std::to_string(cell.state_rows), opts.reuse ? "1" : "0"});
        if (cell.accuracy > best_acc) {
            best_acc = cell.accuracy;
            result.best_k = k;
            result.best_context_tokens = static_cast<int64_t>(cell.mean_context_tokens);
        }
    }

    const auto test = capped(opts.data->test, opts.max_eval_samples);
    EvalOutcome test_cell = eval_split(opts, result.best_k, test);
    result.test_accuracy = test_cell.accuracy;
    csv.row({opts.task.name, opts.selector, std::to_string(result.best_k),
             util::fmt_double(test_cell.mean_context_tokens), "test_accuracy",
             util::fmt_double(test_cell.accuracy), util::fmt_double(test_cell.ms_per_sample),
             std::to_string(test_cell.state_rows), opts.reuse ? "1" : "0"});
    csv.flush();
    result.csv_path = csv_path;

    const uint64_t seeds[] = {opts.seed};
    write_manifest(dir, opts.model->config_digest(), seeds);
    return result;
}

// ------------------------------------------------------------ extrapolation

ExtrapolationResult run_extrapolation(const ExtrapolationOptions& opts) {
    if (opts.model == nullptr) throw std::invalid_argument("run_extrapolation: missing model");
    if (opts.stream.empty()) throw std::invalid_argument("run_extrapolation: empty stream");

    const int64_t L = opts.model->config.max_train_len;
    std::vector<int64_t> buckets = opts.buckets;
    if (buckets.empty()) buckets = {L / 4, L / 2, L, 2 * L, 4 * L, 8 * L};

    ExtrapolationResult result;
    std::vector<int64_t> usable;
    for (int64_t b : buckets) {
        if (b < 2) continue;
        if (b > static_cast<int64_t>(opts.stream.size())) {
            result.truncated = true;
            std::cerr << "run_extrapolation: stream shorter than bucket " << b
                      << ", dropping it\n";
            continue;
        }
        usable.push_back(b);
    }
    if (usable.empty()) throw std::runtime_error("run_extrapolation: no feasible buckets");

    const auto ppl = lm::perplexity(*opts.model, opts.stream, usable);

    const std::string dir = resolve_out_dir(opts.out_dir);
    const std::string csv_path = dir + "/extrapolation.csv";
    util::CsvWriter csv(csv_path, {"length", "ppl"});
    for (const auto& row : ppl) {
        result.rows.push_back({row.length, row.ppl});
        csv.row({std::to_string(row.length), util::fmt_double(row.ppl)});
    }
    csv.flush();
    result.csv_path = csv_path;
    const uint64_t seeds[] = {};
    write_manifest(dir, opts.model->config_digest(), std::span<const uint64_t>(seeds, 0));
    return result;
}

// ------------------------------------------------------------- reuse timing

ReuseBenchResult bench_reuse(const ReuseBenchOptions& opts) {
    if (opts.model == nullptr || opts.tokenizer == nullptr || opts.data == nullptr)
        throw std::invalid_argument("bench_reuse: missing model/tokenizer/data");
    check_grid(opts.shot_grid);
    if (opts.repetitions < 1) throw std::invalid_argument("bench_reuse: repetitions must be >= 1");

    const auto& model = *opts.model;
    const auto& tok = *opts.tokenizer;
    const auto samples = capped(opts.data->test, opts.max_samples);
    if (samples.empty()) throw std::runtime_error("bench_reuse: empty test split");

    const std::string dir = resolve_out_dir(opts.out_dir);
    const std::string csv_path = dir + "/bench_reuse.csv";
    util::CsvWriter csv(csv_path, {"k", "context_token_length", "encode_ms",
                                   "reuse_ms_per_sample", "noreuse_ms_per_sample"});

    ReuseBenchResult result;
    for (int64_t k : opts.shot_grid) {
        if (k > static_cast<int64_t>(opts.data->train.size())) break;
        auto demos = icl::select_random(std::span(opts.data->train), k, opts.seed);

        const auto enc0 = Clock::now();
        auto ctx = icl::build_context(model, tok, opts.task, demos);
        const double encode_ms = ms_since(enc0);

        // Warm-up pass, excluded from timing.
        icl::predict(model, tok, ctx, opts.task, samples[0], icl::ScoreMode::kConditional);

        std::vector<double> reuse_ms, noreuse_ms;
        for (int64_t rep = 0; rep < opts.repetitions; ++rep) {
            auto t0 = Clock::now();
            for (const auto& item : samples)
                icl::predict(model, tok, ctx, opts.task, item, icl::ScoreMode::kConditional);
            reuse_ms.push_back(ms_since(t0) / static_cast<double>(samples.size()));

            t0 = Clock::now();
            for (const auto& item : samples) {
                // Re-encode the shared context from scratch for every sample.
                incr::IncrementalState<double> state(model);
                icl::RenderedContext fresh;
                fresh.text = ctx.text;
                fresh.tokens = ctx.tokens;
                fresh.token_count = ctx.token_count;
                fresh.next_logprobs = state.encode(fresh.tokens);
                fresh.snapshot = state.snapshot();
                icl::predict(model, tok, fresh, opts.task, item, icl::ScoreMode::kConditional);
            }
            noreuse_ms.push_back(ms_since(t0) / static_cast<double>(samples.size()));
        }

        ReuseBenchCell cell;
        cell.k = k;
        cell.context_tokens = ctx.token_count;
        cell.encode_ms = encode_ms;
        cell.reuse_ms_per_sample = median(reuse_ms);
        cell.noreuse_ms_per_sample = median(noreuse_ms);
        result.cells.push_back(cell);
        csv.row({std::to_string(k), std::to_string(cell.context_tokens),
                 util::fmt_double(cell.encode_ms), util::fmt_double(cell.reuse_ms_per_sample),
                 util::fmt_double(cell.noreuse_ms_per_sample)});
    }
    csv.flush();
    result.csv_path = csv_path;
    const uint64_t seeds[] = {opts.seed};
    write_manifest(dir, model.config_digest(), seeds);
    return result;
}

// ------------------------------------------------------------- state growth

StateBenchResult bench_state(const StateBenchOptions& opts) {
    if (opts.model == nullptr) throw std::invalid_argument("bench_state: missing model");
    const auto& model = *opts.model;
    const int64_t c = model.config.attn.chunk_size;
    const int64_t L = model.config.max_train_len;

    std::vector<int64_t> grid = opts.t_grid;
    if (grid.empty()) {
        for (int64_t t = c; t <= 64 * c; t *= 2) grid.push_back(t);
        for (int64_t t = L; t <= 32 * L; t *= 2) grid.push_back(t);
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    }

    util::Rng rng = util::Rng::derive(opts.seed, {0x57u});
    incr::IncrementalState<float> state(model);

    const std::string dir = resolve_out_dir(opts.out_dir);
    const std::string csv_path = dir + "/bench_state.csv";
    util::CsvWriter csv(csv_path, {"t", "rows_local", "rows_remote", "bytes_estimate"});

    StateBenchResult result;
    int64_t t = 0;
    for (int64_t target : grid) {
        while (t < target) {
            state.step(static_cast<int32_t>(rng.uniform_int(model.config.vocab_size)));
            ++t;
        }
        const auto f = state.footprint();
        if (f.rows_local != t % c || f.rows_remote != t / c)
            throw std::logic_error("bench_state: state rows diverge from the closed form");
        result.rows.push_back({t, f.rows_local, f.rows_remote, f.bytes_estimate});
        csv.row({std::to_string(t), std::to_string(f.rows_local), std::to_string(f.rows_remote),
                 std::to_string(f.bytes_estimate)});
    }
    csv.flush();
    result.csv_path = csv_path;
    const uint64_t seeds[] = {opts.seed};
    write_manifest(dir, model.config_digest(), seeds);
    return result;
}

}  // namespace evalm::harness
