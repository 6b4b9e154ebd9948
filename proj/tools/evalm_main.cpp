// evalm: training, evaluation and experiment driver.
//
// Subcommands: train, eval-ppl, icl-sweep, pack, dedup, bench-reuse,
// bench-state, synth-data. Every subcommand takes --config <file> with a
// [subcommand] section of key = value pairs; explicit flags win over the
// file.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "evalm/corpus/blend.hpp"
#include "evalm/corpus/dedup.hpp"
#include "evalm/corpus/filter.hpp"
#include "evalm/corpus/minhash.hpp"
#include "evalm/harness/configfile.hpp"
#include "evalm/harness/experiments.hpp"
#include "evalm/icl/pack.hpp"
#include "evalm/icl/score.hpp"
#include "evalm/lm/checkpoint.hpp"
#include "evalm/lm/perplexity.hpp"
#include "evalm/lm/train.hpp"
#include "evalm/util/csv.hpp"
#include "evalm/util/jsonl.hpp"
#include "evalm/util/rng.hpp"

using namespace evalm;

namespace {

// Applies [section] values from --config as defaults; explicit flags win.
void apply_config(CLI::App* cmd, const std::string& config_path) {
    if (config_path.empty()) return;
    auto cfg = harness::ConfigFile::parse(config_path);
    auto it = cfg.sections.find(cmd->get_name());
    if (it == cfg.sections.end()) return;
    for (const auto& [key, value] : it->second) {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr) throw CLI::ValidationError("unknown config key: " + key);
        if (opt->count() == 0) {
            opt->add_result(value);
            opt->run_callback();
        }
    }
}

std::vector<int64_t> parse_grid(const std::string& text) {
    std::vector<int64_t> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty()) out.push_back(std::stoll(cell));
    }
    return out;
}

std::vector<std::string> read_texts(const std::string& path) {
    std::vector<std::string> texts;
    for (const auto& rec : util::read_jsonl(path)) {
        if (!rec.has("text")) throw std::runtime_error("corpus record without text field");
        texts.push_back(rec.at("text"));
    }
    return texts;
}

lm::ModelConfig model_config_from_preset(const std::string& preset) {
    if (preset == "toy") return lm::ModelConfig::toy();
    if (preset == "350m") return lm::ModelConfig::paper_350m();
    if (preset == "1.3b") return lm::ModelConfig::paper_1_3b();
    throw std::runtime_error("unknown model preset: " + preset);
}

void require_exists(const std::string& path, const std::string& what) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error(what + " does not exist: " + path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EVA-style long-context language model workbench"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "config file with per-subcommand sections")
        ->expected(1);

    // ------------------------------------------------------------- train
    auto* train = app.add_subcommand("train", "pre-train on a JSONL corpus");
    std::string tr_corpus, tr_out = "runs/train", tr_preset = "toy", tr_tokenizer = "byte";
    int64_t tr_steps = 200, tr_batch = 4;
    double tr_lr = 8e-5, tr_dropout = 0.1;
    uint64_t tr_seed = 0;
    train->add_option("--corpus", tr_corpus, "JSONL corpus ({\"text\": ...} per line)");
    train->add_option("--out", tr_out, "output directory");
    train->add_option("--preset", tr_preset, "model preset: toy | 350m | 1.3b");
    train->add_option("--tokenizer", tr_tokenizer, "byte | word");
    train->add_option("--steps", tr_steps, "total optimizer steps");
    train->add_option("--batch-lines", tr_batch, "lines per step");
    train->add_option("--lr", tr_lr, "peak learning rate");
    train->add_option("--dropout", tr_dropout, "dropout rate");
    train->add_option("--seed", tr_seed, "seed");

    // ---------------------------------------------------------- eval-ppl
    auto* evalppl = app.add_subcommand("eval-ppl", "perplexity-vs-length extrapolation sweep");
    std::string ep_ckpt, ep_stream, ep_out = "runs/eval-ppl", ep_buckets;
    evalppl->add_option("--checkpoint", ep_ckpt, "model checkpoint");
    evalppl->add_option("--stream", ep_stream, "JSONL text stream for evaluation");
    evalppl->add_option("--out", ep_out, "output directory");
    evalppl->add_option("--buckets", ep_buckets, "comma-separated lengths (default L/4..8L)");

    // --------------------------------------------------------- icl-sweep
    auto* sweep = app.add_subcommand("icl-sweep", "shot-grid sweep with validation-driven best-k");
    std::string sw_ckpt, sw_task = "synth3", sw_data, sw_out = "runs/icl-sweep";
    std::string sw_selector = "random", sw_grid, sw_templates;
    uint64_t sw_seed = 0;
    bool sw_noreuse = false;
    int64_t sw_max_samples = 0;
    sweep->add_option("--checkpoint", sw_ckpt, "model checkpoint");
    sweep->add_option("--task", sw_task, "task name in the template registry");
    sweep->add_option("--data", sw_data, "directory with train/validation/test.jsonl");
    sweep->add_option("--templates", sw_templates, "template registry JSON (default builtin)");
    sweep->add_option("--selector", sw_selector, "random | topk");
    sweep->add_option("--grid", sw_grid, "comma-separated shot grid (default: reference grid)");
    sweep->add_option("--seed", sw_seed, "seed");
    sweep->add_option("--out", sw_out, "output directory");
    sweep->add_option("--max-samples", sw_max_samples, "cap on evaluated samples (0 = all)");
    sweep->add_flag("--no-reuse", sw_noreuse, "score jointly instead of reusing cached states");

    // -------------------------------------------------------------- pack
    auto* pack = app.add_subcommand("pack", "pack rendered instruction exemplars to a budget");
    std::string pk_data, pk_task = "synth3", pk_out = "runs/pack", pk_templates;
    int64_t pk_budget = 8192;
    uint64_t pk_seed = 0;
    pack->add_option("--data", pk_data, "directory with train.jsonl to pack");
    pack->add_option("--task", pk_task, "task name for rendering");
    pack->add_option("--templates", pk_templates, "template registry JSON (default builtin)");
    pack->add_option("--budget", pk_budget, "token budget per line (8192, 16384, ...)");
    pack->add_option("--seed", pk_seed, "shuffle seed");
    pack->add_option("--out", pk_out, "output directory");

    // ------------------------------------------------------------- dedup
    auto* dedup = app.add_subcommand("dedup", "filter, deduplicate and blend a JSONL corpus");
    std::string dd_in, dd_out = "runs/dedup", dd_flagged, dd_weights;
    double dd_threshold = 0.95;
    double dd_stop_min = 0.0, dd_word_rep_max = 1.0, dd_char_rep_max = 1.0, dd_specific_max = 1.0;
    uint64_t dd_seed = 0;
    dedup->add_option("--corpus", dd_in, "input JSONL corpus");
    dedup->add_option("--out", dd_out, "output directory");
    dedup->add_option("--threshold", dd_threshold, "Jaccard threshold");
    dedup->add_option("--stop-word-ratio-min", dd_stop_min, "reject below this stop-word ratio");
    dedup->add_option("--word-repetition-max", dd_word_rep_max, "reject above this ratio");
    dedup->add_option("--char-repetition-max", dd_char_rep_max, "reject above this ratio");
    dedup->add_option("--specific-char-max", dd_specific_max, "reject above this ratio");
    dedup->add_option("--flagged-words", dd_flagged, "file with one flagged word per line");
    dedup->add_option("--weights", dd_weights,
                      "source blend weights, e.g. web:0.7,books:0.3 (default uniform)");
    std::string dd_include;
    dedup->add_option("--include-sources", dd_include,
                      "comma-separated source tags to keep (default: all)");
    dedup->add_option("--seed", dd_seed, "seed");

    // ------------------------------------------------------- bench-reuse
    auto* breuse = app.add_subcommand("bench-reuse", "per-sample timing with and without reuse");
    std::string br_ckpt, br_data, br_task = "synth3", br_out = "runs/bench-reuse", br_grid;
    std::string br_templates;
    uint64_t br_seed = 0;
    int64_t br_reps = 5, br_max_samples = 0;
    breuse->add_option("--checkpoint", br_ckpt, "model checkpoint");
    breuse->add_option("--data", br_data, "task data directory");
    breuse->add_option("--task", br_task, "task name");
    breuse->add_option("--templates", br_templates, "template registry JSON (default builtin)");
    breuse->add_option("--grid", br_grid, "comma-separated shot grid");
    breuse->add_option("--reps", br_reps, "timing repetitions per cell");
    breuse->add_option("--max-samples", br_max_samples, "cap on timed samples (0 = all)");
    breuse->add_option("--seed", br_seed, "seed");
    breuse->add_option("--out", br_out, "output directory");

    // ------------------------------------------------------- bench-state
    auto* bstate = app.add_subcommand("bench-state", "state growth over encoded length");
    std::string bs_ckpt, bs_out = "runs/bench-state", bs_grid;
    uint64_t bs_seed = 0;
    bstate->add_option("--checkpoint", bs_ckpt, "model checkpoint");
    bstate->add_option("--grid", bs_grid, "comma-separated t values (default geometric)");
    bstate->add_option("--seed", bs_seed, "seed");
    bstate->add_option("--out", bs_out, "output directory");

    // -------------------------------------------------------- synth-data
    auto* synthcmd = app.add_subcommand("synth-data", "generate synthetic corpora and tasks");
    std::string sy_kind = "sentences", sy_out = "runs/synth";
    int64_t sy_n = 256;
    uint64_t sy_seed = 0;
    synthcmd->add_option("--kind", sy_kind, "sentences | task");
    synthcmd->add_option("--n", sy_n, "record count");
    synthcmd->add_option("--seed", sy_seed, "seed");
    synthcmd->add_option("--out", sy_out, "output directory");

    CLI11_PARSE(app, argc, argv);
    CLI::App* active = app.get_subcommands().front();

    try {
        apply_config(active, config_path);

        if (active == train) {
            require_exists(tr_corpus, "corpus");
            lm::ModelConfig mc = model_config_from_preset(tr_preset);
            lm::Tokenizer tok = lm::Tokenizer::byte_level();
            auto texts = read_texts(tr_corpus);
            if (tr_tokenizer == "word") {
                tok = lm::Tokenizer::word_level(texts, mc.vocab_size);
            } else if (tr_tokenizer != "byte") {
                throw std::runtime_error("unknown tokenizer mode: " + tr_tokenizer);
            }
            auto lines = lm::pack_corpus(texts, tok, mc.max_train_len, true);

            lm::TrainConfig tc;
            tc.learning_rate = tr_lr;
            tc.dropout = tr_dropout;
            tc.total_steps = tr_steps;
            tc.batch_lines = tr_batch;
            tc.seed = tr_seed;

            std::string dir = harness::output_dir_override();
            if (dir.empty()) dir = tr_out;
            std::filesystem::create_directories(dir);
            auto res = lm::train_lm(lines, mc, tc, dir + "/train_log.csv");
            lm::save_checkpoint(res.model, dir + "/model.evlm");
            tok.save(dir + "/tokenizer.json");
            const uint64_t seeds[] = {tr_seed};
            harness::write_manifest(dir, res.model.config_digest(), seeds);
            std::cout << "trained " << tr_steps << " steps; final loss "
                      << res.log.back().loss << "; checkpoint " << dir << "/model.evlm\n";
        } else if (active == evalppl) {
            require_exists(ep_ckpt, "checkpoint");
            require_exists(ep_stream, "stream");
            lm::Model model = lm::load_checkpoint(ep_ckpt);
            lm::Tokenizer tok = lm::Tokenizer::byte_level();
            std::string text;
            for (const auto& t : read_texts(ep_stream)) text += t + "\n";
            auto stream = tok.encode(text);

            harness::ExtrapolationOptions opts;
            opts.model = &model;
            opts.stream = stream;
            if (!ep_buckets.empty()) opts.buckets = parse_grid(ep_buckets);
            opts.out_dir = ep_out;
            auto res = harness::run_extrapolation(opts);
            std::cout << "wrote " << res.csv_path << "\n";
        } else if (active == sweep) {
            require_exists(sw_ckpt, "checkpoint");
            require_exists(sw_data, "data directory");
            lm::Model model = lm::load_checkpoint(sw_ckpt);
            lm::Tokenizer tok = lm::Tokenizer::byte_level();
            auto reg = sw_templates.empty() ? icl::TaskRegistry::builtin()
                                            : icl::TaskRegistry::from_file(sw_templates);
            auto data = icl::load_task_data(sw_data);

            harness::SweepOptions opts;
            opts.model = &model;
            opts.tokenizer = &tok;
            opts.task = reg.get(sw_task);
            opts.data = &data;
            opts.shot_grid = sw_grid.empty() ? harness::default_shot_grid() : parse_grid(sw_grid);
            opts.seed = sw_seed;
            opts.selector = sw_selector;
            opts.reuse = !sw_noreuse;
            opts.out_dir = sw_out;
            opts.max_eval_samples = sw_max_samples;
            auto res = harness::run_icl_sweep(opts);
            std::cout << "best k " << res.best_k << " (context " << res.best_context_tokens
                      << " tokens), test accuracy " << res.test_accuracy << "; wrote "
                      << res.csv_path << "\n";
        } else if (active == pack) {
            require_exists(pk_data, "data directory");
            auto reg = pk_templates.empty() ? icl::TaskRegistry::builtin()
                                            : icl::TaskRegistry::from_file(pk_templates);
            const auto& task = reg.get(pk_task);
            auto data = icl::load_task_data(pk_data);
            lm::Tokenizer tok = lm::Tokenizer::byte_level();

            // Instruction-tuning order: seeded shuffle, never similarity order.
            std::vector<size_t> order(data.train.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            util::Rng rng = util::Rng::derive(pk_seed, {0x70u});
            rng.shuffle(order);

            std::vector<std::string> rendered;
            std::vector<int64_t> lengths;
            for (size_t idx : order) {
                const auto& rec = data.train[idx];
                std::string text = icl::render_template(task, rec, rec.at("label")) + "\n";
                lengths.push_back(static_cast<int64_t>(tok.encode(text).size()));
                rendered.push_back(std::move(text));
            }
            auto res = icl::pack_msit(lengths, pk_budget);

            std::string dir = harness::output_dir_override();
            if (dir.empty()) dir = pk_out;
            std::filesystem::create_directories(dir);
            std::vector<util::JsonRecord> out_lines;
            for (const auto& line : res.lines) {
                std::string text;
                for (int64_t i : line.exemplar_indices) text += rendered[static_cast<size_t>(i)];
                util::JsonRecord rec;
                rec.fields["text"] = text;
                rec.fields["token_len"] = std::to_string(line.token_len);
                out_lines.push_back(std::move(rec));
            }
            util::write_jsonl(dir + "/packed.jsonl", out_lines);
            std::cout << "packed " << out_lines.size() << " lines (budget " << pk_budget
                      << ", skipped " << res.skipped.size() << ") to " << dir
                      << "/packed.jsonl\n";
        } else if (active == dedup) {
            require_exists(dd_in, "corpus");
            auto records = util::read_jsonl(dd_in);
            corpus::FilterRules rules;
            rules.stop_word_ratio_min = dd_stop_min;
            rules.word_repetition_ratio_max = dd_word_rep_max;
            rules.char_repetition_ratio_max = dd_char_rep_max;
            rules.specific_char_ratio_max = dd_specific_max;
            if (!dd_flagged.empty()) {
                std::ifstream fw(dd_flagged);
                if (!fw) throw std::runtime_error("cannot read flagged-word list: " + dd_flagged);
                std::string word;
                while (std::getline(fw, word)) {
                    if (!word.empty()) rules.flagged_words.push_back(word);
                }
            }

            std::set<std::string> include;
            if (!dd_include.empty()) {
                std::stringstream is(dd_include);
                std::string cell;
                while (std::getline(is, cell, ',')) {
                    if (!cell.empty()) include.insert(cell);
                }
            }

            std::vector<corpus::DocumentRecord> docs;
            int64_t next_id = 0;
            int64_t rejected = 0;
            for (const auto& rec : records) {
                corpus::DocumentRecord doc;
                doc.id = rec.has("id") ? std::stoll(rec.at("id")) : next_id;
                doc.text = rec.has("text") ? rec.at("text") : "";
                doc.source = rec.has("source") ? rec.at("source") : "default";
                doc.priority = rec.has("priority") ? std::stoll(rec.at("priority")) : 0;
                ++next_id;
                if (!include.empty() && include.count(doc.source) == 0) continue;
                auto decision = corpus::filter_document(doc.text, rules);
                if (!decision.keep) {
                    ++rejected;
                    continue;
                }
                doc.text = decision.normalized_text;
                docs.push_back(std::move(doc));
            }
            if (docs.empty()) throw std::runtime_error("no documents survive filtering");

            std::vector<corpus::Signature> sigs;
            for (const auto& d : docs) sigs.push_back(corpus::minhash_signature(d.text, dd_seed));
            auto res = corpus::dedup_cluster(sigs, docs, dd_threshold);

            std::string dir = harness::output_dir_override();
            if (dir.empty()) dir = dd_out;
            std::filesystem::create_directories(dir);
            util::CsvWriter removed(dir + "/removed.csv",
                                    {"id", "component", "survivor_id",
                                     "estimated_similarity_to_survivor"});
            std::map<std::string, double> weights;
            if (!dd_weights.empty()) {
                std::stringstream ws(dd_weights);
                std::string cell;
                while (std::getline(ws, cell, ',')) {
                    const size_t colon = cell.find(':');
                    if (colon == std::string::npos)
                        throw std::runtime_error("bad --weights entry: " + cell);
                    weights[cell.substr(0, colon)] = std::stod(cell.substr(colon + 1));
                }
            }
            std::vector<corpus::DocumentRecord> survivors;
            for (size_t i = 0; i < docs.size(); ++i) {
                if (res.survivor[i]) {
                    survivors.push_back(docs[i]);
                    if (dd_weights.empty()) weights[docs[i].source] = 1.0;
                    continue;
                }
                const auto s = static_cast<size_t>(res.survivor_of[i]);
                removed.row({std::to_string(docs[i].id),
                             std::to_string(res.component[i]),
                             std::to_string(docs[s].id),
                             util::fmt_double(corpus::estimate_similarity(sigs[i], sigs[s]))});
            }
            removed.flush();

            auto blended = corpus::blend_batches(survivors, weights, dd_seed);
            std::vector<util::JsonRecord> out_recs;
            for (const auto& d : blended) {
                util::JsonRecord rec;
                rec.fields["id"] = std::to_string(d.id);
                rec.fields["text"] = d.text;
                rec.fields["source"] = d.source;
                out_recs.push_back(std::move(rec));
            }
            util::write_jsonl(dir + "/corpus.jsonl", out_recs);
            std::cout << "kept " << survivors.size() << " of " << records.size() << " ("
                      << rejected << " filtered, "
                      << (docs.size() - survivors.size()) << " near-duplicates) -> " << dir
                      << "/corpus.jsonl\n";
        } else if (active == breuse) {
            require_exists(br_ckpt, "checkpoint");
            require_exists(br_data, "data directory");
            lm::Model model = lm::load_checkpoint(br_ckpt);
            lm::Tokenizer tok = lm::Tokenizer::byte_level();
            auto reg = br_templates.empty() ? icl::TaskRegistry::builtin()
                                            : icl::TaskRegistry::from_file(br_templates);
            auto data = icl::load_task_data(br_data);

            harness::ReuseBenchOptions opts;
            opts.model = &model;
            opts.tokenizer = &tok;
            opts.task = reg.get(br_task);
            opts.data = &data;
            opts.shot_grid = br_grid.empty() ? std::vector<int64_t>{0, 1, 4, 16}
                                             : parse_grid(br_grid);
            opts.seed = br_seed;
            opts.repetitions = br_reps;
            opts.max_samples = br_max_samples;
            opts.out_dir = br_out;
            auto res = harness::bench_reuse(opts);
            std::cout << "wrote " << res.csv_path << "\n";
        } else if (active == bstate) {
            require_exists(bs_ckpt, "checkpoint");
            lm::Model model = lm::load_checkpoint(bs_ckpt);
            harness::StateBenchOptions opts;
            opts.model = &model;
            if (!bs_grid.empty()) opts.t_grid = parse_grid(bs_grid);
            opts.seed = bs_seed;
            opts.out_dir = bs_out;
            auto res = harness::bench_state(opts);
            std::cout << "wrote " << res.csv_path << "\n";
        } else if (active == synthcmd) {
            std::string dir = harness::output_dir_override();
            if (dir.empty()) dir = sy_out;
            std::filesystem::create_directories(dir);
            util::Rng rng(sy_seed);
            if (sy_kind == "sentences") {
                std::vector<util::JsonRecord> recs;
                for (int64_t i = 0; i < sy_n; ++i) {
                    util::JsonRecord rec;
                    std::string text;
                    const int64_t words = 8 + rng.uniform_int(12);
                    for (int64_t w = 0; w < words; ++w) {
                        if (w > 0) text.push_back(' ');
                        const int64_t len = 2 + rng.uniform_int(6);
                        for (int64_t j = 0; j < len; ++j)
                            text.push_back(static_cast<char>('a' + rng.uniform_int(26)));
                    }
                    rec.fields["text"] = text;
                    recs.push_back(std::move(rec));
                }
                util::write_jsonl(dir + "/corpus.jsonl", recs);
                std::cout << "wrote " << dir << "/corpus.jsonl\n";
            } else if (sy_kind == "task") {
                const std::vector<std::string> labels = {"alpha", "beta", "gamma"};
                auto make_split = [&](const std::string& name, int64_t n) {
                    std::vector<util::JsonRecord> recs;
                    for (int64_t i = 0; i < n; ++i) {
                        util::JsonRecord rec;
                        std::string s;
                        const int64_t words = 3 + rng.uniform_int(4);
                        for (int64_t w = 0; w < words; ++w) {
                            if (w > 0) s.push_back(' ');
                            const int64_t len = 2 + rng.uniform_int(5);
                            for (int64_t j = 0; j < len; ++j)
                                s.push_back(static_cast<char>('a' + rng.uniform_int(26)));
                        }
                        rec.fields["Sentence"] = s;
                        rec.fields["label"] =
                            labels[static_cast<size_t>(rng.uniform_int(3))];
                        recs.push_back(std::move(rec));
                    }
                    util::write_jsonl(dir + "/" + name + ".jsonl", recs);
                };
                make_split("train", sy_n);
                make_split("validation", std::max<int64_t>(8, sy_n / 4));
                make_split("test", std::max<int64_t>(8, sy_n / 4));
                auto reg = icl::TaskRegistry::builtin();
                icl::TaskSpec spec;
                spec.name = "synth3";
                spec.template_str = "{Sentence} It is {Label}";
                spec.labels = labels;
                spec.fields = {"Sentence"};
                reg.add(spec);
                reg.to_file(dir + "/templates.json");
                std::cout << "wrote task splits + templates to " << dir << "\n";
            } else {
                throw std::runtime_error("unknown synth kind: " + sy_kind);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "evalm: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
