#include "evalm/lm/train.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "evalm/lm/forward.hpp"
#include "evalm/util/csv.hpp"

namespace evalm::lm {

namespace {

template <class T>
std::vector<util::Mat<T>*> tensor_list(ParamsT<T>& p) {
    std::vector<util::Mat<T>*> out;
    for_each_tensor(p, [&](const std::string&, util::Mat<T>& m) { out.push_back(&m); });
    return out;
}

int64_t worker_count(int64_t batch_lines) {
    int64_t n = static_cast<int64_t>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("EVALM_THREADS")) {
        const int64_t v = std::atoll(env);
        if (v > 0) n = v;
    }
    if (n < 1) n = 1;
    return std::min(n, batch_lines);
}

template <class Tv>
TrainResult train_impl(const std::vector<std::vector<int32_t>>& lines, const ModelConfig& mc,
                       const TrainConfig& tc, const std::string& log_csv_path,
                       const std::function<void(const StepLog&)>& on_step) {
    TrainResult result;
    result.model.config = mc;
    result.model.init(tc.seed);
    Model& model = result.model;

    ParamsT<double> adam_m = zeros_like<double>(model.params);
    ParamsT<double> adam_v = zeros_like<double>(model.params);
    ParamsT<double> grad_acc = zeros_like<double>(model.params);
    auto params_t = tensor_list(model.params);
    auto m_t = tensor_list(adam_m);
    auto v_t = tensor_list(adam_v);
    auto acc_t = tensor_list(grad_acc);

    const int64_t batch = tc.batch_lines;
    std::vector<ParamsT<Tv>> line_grads;
    for (int64_t i = 0; i < batch; ++i) line_grads.push_back(zeros_like<Tv>(model.params));

    std::unique_ptr<util::CsvWriter> csv;
    if (!log_csv_path.empty()) {
        csv = std::make_unique<util::CsvWriter>(log_csv_path,
                                                std::vector<std::string>{"step", "loss", "lr",
                                                                         "grad_norm"});
    }

    // Epoch-wise seeded shuffle of line indices; batches cycle through it.
    std::vector<int64_t> order(lines.size());
    for (size_t i = 0; i < lines.size(); ++i) order[i] = static_cast<int64_t>(i);
    uint64_t epoch = 0;
    {
        util::Rng shuffle_rng = util::Rng::derive(tc.seed, {0x5u, epoch});
        shuffle_rng.shuffle(order);
    }
    size_t cursor = 0;

    const int64_t workers = worker_count(batch);
    for (int64_t step = 0; step < tc.total_steps; ++step) {
        std::vector<int64_t> batch_idx(static_cast<size_t>(batch));
        for (int64_t b = 0; b < batch; ++b) {
            if (cursor >= order.size()) {
                cursor = 0;
                ++epoch;
                util::Rng shuffle_rng = util::Rng::derive(tc.seed, {0x5u, epoch});
                shuffle_rng.shuffle(order);
            }
            batch_idx[static_cast<size_t>(b)] = order[cursor++];
        }

        std::vector<double> line_loss(static_cast<size_t>(batch), 0.0);
        auto run_lines = [&](int64_t w) {
            for (int64_t b = w; b < batch; b += workers) {
                auto& g = line_grads[static_cast<size_t>(b)];
                for_each_tensor(g, [](const std::string&, util::Mat<Tv>& m) { m.zero(); });
                util::Rng drop_rng = util::Rng::derive(
                    tc.seed, {0x7u, static_cast<uint64_t>(step), static_cast<uint64_t>(b)});
                line_loss[static_cast<size_t>(b)] = line_loss_and_grad<Tv>(
                    model, lines[static_cast<size_t>(batch_idx[static_cast<size_t>(b)])], g,
                    tc.dropout, drop_rng);
            }
        };
        if (workers <= 1) {
            run_lines(0);
        } else {
            std::vector<std::thread> pool;
            for (int64_t w = 0; w < workers; ++w) pool.emplace_back(run_lines, w);
            for (auto& th : pool) th.join();
        }

        double loss = 0.0;
        for (double l : line_loss) loss += l;
        loss /= static_cast<double>(batch);
        if (!std::isfinite(loss))
            throw std::runtime_error("train_lm: non-finite loss at step " + std::to_string(step));

        // Reduce per-line gradients in line order (deterministic for any
        // worker count), averaged over the batch.
        const double inv_batch = 1.0 / static_cast<double>(batch);
        for (auto* acc : acc_t) acc->zero();
        for (int64_t b = 0; b < batch; ++b) {
            auto g_t = tensor_list(line_grads[static_cast<size_t>(b)]);
            for (size_t ti = 0; ti < acc_t.size(); ++ti) {
                auto& acc = *acc_t[ti];
                const auto& g = *g_t[ti];
                for (int64_t i = 0; i < acc.size(); ++i)
                    acc.data[static_cast<size_t>(i)] +=
                        static_cast<double>(g.data[static_cast<size_t>(i)]) * inv_batch;
            }
        }

        const double grad_norm = clip_gradients(grad_acc, tc.clip_norm);
        const double lr = lr_at_step(tc, step);

        const double bc1 = 1.0 - std::pow(tc.adam_beta1, static_cast<double>(step + 1));
        const double bc2 = 1.0 - std::pow(tc.adam_beta2, static_cast<double>(step + 1));
        for (size_t ti = 0; ti < params_t.size(); ++ti) {
            auto& p = *params_t[ti];
            auto& g = *acc_t[ti];
            auto& m = *m_t[ti];
            auto& v = *v_t[ti];
            for (int64_t i = 0; i < p.size(); ++i) {
                const size_t k = static_cast<size_t>(i);
                const double gi = g.data[k];
                m.data[k] = tc.adam_beta1 * m.data[k] + (1.0 - tc.adam_beta1) * gi;
                v.data[k] = tc.adam_beta2 * v.data[k] + (1.0 - tc.adam_beta2) * gi * gi;
                const double mhat = m.data[k] / bc1;
                const double vhat = v.data[k] / bc2;
                double pd = static_cast<double>(p.data[k]);
                pd -= lr * (mhat / (std::sqrt(vhat) + tc.adam_eps) + tc.weight_decay * pd);
                p.data[k] = static_cast<float>(pd);
            }
        }

        StepLog entry{step, loss, lr, grad_norm};
        result.log.push_back(entry);
        if (csv) {
            csv->row({std::to_string(step), util::fmt_double(loss), util::fmt_double(lr),
                      util::fmt_double(grad_norm)});
        }
        if (on_step) on_step(entry);
    }
    return result;
}

}  // namespace

std::vector<std::vector<int32_t>> pack_corpus(const std::vector<std::string>& texts,
                                              const Tokenizer& tokenizer, int64_t line_len,
                                              bool prepend_bos) {
    if (line_len < 2) throw std::invalid_argument("pack_corpus: line_len must be >= 2");
    std::vector<int32_t> stream;
    for (const auto& text : texts) {
        auto ids = tokenizer.encode(text);
        stream.insert(stream.end(), ids.begin(), ids.end());
        auto sep = tokenizer.encode("\n");
        stream.insert(stream.end(), sep.begin(), sep.end());
    }
    const int64_t body = prepend_bos ? line_len - 1 : line_len;
    std::vector<std::vector<int32_t>> lines;
    for (size_t off = 0; off + static_cast<size_t>(body) <= stream.size();
         off += static_cast<size_t>(body)) {
        std::vector<int32_t> line;
        line.reserve(static_cast<size_t>(line_len));
        if (prepend_bos) line.push_back(tokenizer.bos_id());
        line.insert(line.end(), stream.begin() + static_cast<int64_t>(off),
                    stream.begin() + static_cast<int64_t>(off) + body);
        lines.push_back(std::move(line));
    }
    return lines;
}

template <class T>
double clip_gradients(ParamsT<T>& grads, double clip_norm) {
    double sq = 0.0;
    for_each_tensor(grads, [&](const std::string&, util::Mat<T>& m) {
        for (const T& g : m.data) sq += static_cast<double>(g) * static_cast<double>(g);
    });
    const double norm = std::sqrt(sq);
    if (norm > clip_norm && norm > 0.0) {
        const double scale = clip_norm / norm;
        for_each_tensor(grads, [&](const std::string&, util::Mat<T>& m) {
            for (T& g : m.data) g = static_cast<T>(static_cast<double>(g) * scale);
        });
    }
    return norm;
}

template double clip_gradients<float>(ParamsT<float>&, double);
template double clip_gradients<double>(ParamsT<double>&, double);

TrainResult train_lm(const std::vector<std::vector<int32_t>>& lines, const ModelConfig& mc,
                     const TrainConfig& tc, const std::string& log_csv_path,
                     const std::function<void(const StepLog&)>& on_step) {
    mc.validate();
    tc.validate();
    if (lines.empty()) throw std::runtime_error("train_lm: empty corpus after packing");
    for (const auto& line : lines) {
        if (static_cast<int64_t>(line.size()) > mc.max_train_len)
            throw std::invalid_argument("train_lm: line exceeds max_train_len");
        if (line.size() < 2) throw std::invalid_argument("train_lm: line shorter than 2 tokens");
    }
    if (tc.precision == Precision::kF64)
        return train_impl<double>(lines, mc, tc, log_csv_path, on_step);
    return train_impl<float>(lines, mc, tc, log_csv_path, on_step);
}

}  // namespace evalm::lm
