#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "evalm/lm/forward.hpp"
#include "evalm/lm/model.hpp"
#include "evalm/util/hash.hpp"

// Per-token incremental encoding. The cached state is, per layer, the local
// key/value buffer (up to chunk_size rows) plus one compressed key/value row
// per completed chunk, so storage after t tokens is (t mod c) + floor(t / c)
// rows per layer and head. Snapshots are immutable copy-on-write views with
// a content digest; resuming and stepping clones the storage on first write.

namespace evalm::incr {

template <class Tv>
struct LayerState {
    util::Mat<Tv> local_k, local_v;    // 0..c rows
    util::Mat<Tv> remote_k, remote_v;  // one row per completed chunk
};

template <class Tv>
struct StateData {
    std::vector<LayerState<Tv>> layers;
    int64_t t = 0;
    uint64_t config_digest = 0;
};

template <class Tv>
struct StateSnapshot {
    std::shared_ptr<const StateData<Tv>> data;
    uint64_t digest = 0;
};

struct StateFootprint {
    int64_t rows_local = 0;   // per layer/head
    int64_t rows_remote = 0;  // per layer/head
    int64_t bytes_estimate = 0;
};

template <class Tv>
uint64_t state_digest(const StateData<Tv>& s) {
    util::Fnv64 f;
    f.update_value(s.config_digest);
    f.update_value(s.t);
    for (const auto& L : s.layers) {
        for (const util::Mat<Tv>* m : {&L.local_k, &L.local_v, &L.remote_k, &L.remote_v}) {
            f.update_value(m->rows);
            f.update(m->data.data(), m->data.size() * sizeof(Tv));
        }
    }
    return f.digest();
}

template <class Tv>
class IncrementalState {
public:
    // t = 0 base case: all four buffers empty in every layer.
    explicit IncrementalState(const lm::Model& model) : model_(&model) {
        model.config.validate();
        data_ = std::make_shared<StateData<Tv>>();
        data_->layers.resize(static_cast<size_t>(model.config.num_layers));
        const int64_t d = model.config.attn.model_dim;
        for (auto& L : data_->layers) {
            L.local_k.cols = L.local_v.cols = d;
            L.remote_k.cols = L.remote_v.cols = d;
        }
        data_->config_digest = model.config_digest();
    }

    static IncrementalState resume(const lm::Model& model, const StateSnapshot<Tv>& snap) {
        if (snap.data == nullptr) throw std::invalid_argument("resume: empty snapshot");
        if (snap.data->config_digest != model.config_digest())
            throw std::runtime_error("resume: snapshot does not match this model configuration");
        IncrementalState st(model);
        st.data_ = std::const_pointer_cast<StateData<Tv>>(snap.data);
        st.shared_ = true;
        return st;
    }

    // Takes ownership of deserialized state data (used by the cache loader).
    static IncrementalState adopt(const lm::Model& model, std::shared_ptr<StateData<Tv>> data) {
        if (data->config_digest != model.config_digest())
            throw std::runtime_error("state cache does not match this model configuration");
        IncrementalState st(model);
        st.data_ = std::move(data);
        return st;
    }

    // Consumes one token at position t (0-based) and returns the next-token
    // log-probability vector. Compression of a just-filled local buffer
    // happens after the attention output is produced.
    std::vector<Tv> step(int32_t token) {
        const auto& cfg = model_->config;
        if (token < 0 || token >= cfg.vocab_size)
            throw std::invalid_argument("step: token id out of vocabulary");
        ensure_unique();

        const auto& P = model_->params;
        const int64_t d = cfg.attn.model_dim;
        const int64_t dh = cfg.attn.head_dim();
        const int64_t heads = cfg.attn.num_heads;
        const int64_t c = cfg.attn.chunk_size;
        const bool learned = cfg.attn.pooling_mode == attn::PoolingMode::kLearnedQuery;
        const int64_t pos = data_->t;

        util::Mat<Tv> x(1, d);
        {
            const float* e = P.tok_embed.row_ptr(token);
            const float* pe =
                P.cpe.row_ptr(attn::position_row(pos, cfg.attn.cpe_period, cfg.position_mode));
            for (int64_t i = 0; i < d; ++i)
                x(0, i) = static_cast<Tv>(e[i]) + static_cast<Tv>(pe[i]);
        }

        util::Mat<Tv> a, q, k, v, proj, b, u, gact, ffn;
        std::vector<Tv> mu, rstd, probs, pq(static_cast<size_t>(dh));
        for (int64_t l = 0; l < cfg.num_layers; ++l) {
            const auto& L = P.layers[static_cast<size_t>(l)];
            auto& S = data_->layers[static_cast<size_t>(l)];

            lm::detail::layernorm(x, L.ln1_g, L.ln1_b, a, mu, rstd);
            lm::detail::affine(a, L.wq, &L.bq, q);
            lm::detail::affine(a, L.wk, &L.bk, k);
            lm::detail::affine(a, L.wv, &L.bv, v);
            S.local_k.push_row(k.row(0));
            S.local_v.push_row(v.row(0));

            util::Mat<Tv> heads_out(1, d);
            const int64_t nr = S.remote_k.rows;
            const int64_t nl = S.local_k.rows;
            probs.resize(static_cast<size_t>(nr + nl));
            for (int64_t h = 0; h < heads; ++h) {
                attn::RowsView<Tv> rk{nr > 0 ? S.remote_k.data.data() + h * dh : nullptr, nr, d};
                attn::RowsView<Tv> rv{nr > 0 ? S.remote_v.data.data() + h * dh : nullptr, nr, d};
                attn::RowsView<Tv> lk{S.local_k.data.data() + h * dh, nl, d};
                attn::RowsView<Tv> lv{S.local_v.data.data() + h * dh, nl, d};
                attn::attend_two(q.row_ptr(0) + h * dh, rk, rv, lk, lv, dh,
                                 heads_out.row_ptr(0) + h * dh, probs.data());
            }
            lm::detail::affine(heads_out, L.wo, &L.bo, proj);
            for (int64_t i = 0; i < d; ++i) x(0, i) += proj(0, i);

            if (nl == c) {
                // Local buffer filled: compress it into one remote row and
                // reset (Algorithm-1 update order).
                std::vector<Tv> khat(static_cast<size_t>(d)), vhat(static_cast<size_t>(d));
                std::vector<Tv> w(static_cast<size_t>(c));
                for (int64_t h = 0; h < heads; ++h) {
                    const Tv* query = nullptr;
                    if (learned) {
                        for (int64_t i = 0; i < dh; ++i)
                            pq[static_cast<size_t>(i)] = static_cast<Tv>(L.pool_q(h, i));
                        query = pq.data();
                    }
                    attn::RowsView<Tv> kc{S.local_k.data.data() + h * dh, c, d};
                    attn::RowsView<Tv> vc{S.local_v.data.data() + h * dh, c, d};
                    attn::pool_chunk(kc, vc, query, dh, khat.data() + h * dh,
                                     vhat.data() + h * dh, w.data());
                }
                S.remote_k.push_row(std::span<const Tv>(khat));
                S.remote_v.push_row(std::span<const Tv>(vhat));
                S.local_k.clear_rows();
                S.local_v.clear_rows();
            }

            lm::detail::layernorm(x, L.ln2_g, L.ln2_b, b, mu, rstd);
            lm::detail::affine(b, L.w1, &L.b1, u);
            gact = util::Mat<Tv>(1, u.cols);
            for (int64_t i = 0; i < u.cols; ++i) gact(0, i) = lm::detail::gelu(u(0, i));
            lm::detail::affine(gact, L.w2, &L.b2, ffn);
            for (int64_t i = 0; i < d; ++i) x(0, i) += ffn(0, i);
        }

        util::Mat<Tv> y;
        lm::detail::layernorm(x, P.lnf_g, P.lnf_b, y, mu, rstd);
        const util::Mat<float>& head = cfg.tie_embeddings ? P.tok_embed : P.head;
        util::Mat<Tv> logits;
        lm::detail::affine(y, head, nullptr, logits);
        lm::detail::log_softmax_row(logits.row_ptr(0), cfg.vocab_size);

        ++data_->t;
        return std::move(logits.data);
    }

    // Folds step over the sequence; returns the last step's log-probs
    // (empty vector when `tokens` is empty, state unchanged).
    std::vector<Tv> encode(std::span<const int32_t> tokens) {
        std::vector<Tv> last;
        for (int32_t tok : tokens) last = step(tok);
        return last;
    }

    StateSnapshot<Tv> snapshot() const {
        StateSnapshot<Tv> s;
        s.data = data_;
        s.digest = state_digest(*data_);
        return s;
    }

    StateFootprint footprint() const {
        const auto& cfg = model_->config;
        const int64_t c = cfg.attn.chunk_size;
        StateFootprint f;
        f.rows_local = data_->t % c;
        f.rows_remote = data_->t / c;
        f.bytes_estimate = (f.rows_local + f.rows_remote) * cfg.attn.model_dim *
                           cfg.num_layers * 2 * static_cast<int64_t>(sizeof(Tv));
        return f;
    }

    uint64_t digest() const { return state_digest(*data_); }
    int64_t token_count() const { return data_->t; }
    const lm::Model& model() const { return *model_; }
    const StateData<Tv>& data() const { return *data_; }

private:
    void ensure_unique() {
        if (!shared_ && data_.use_count() == 1) return;
        data_ = std::make_shared<StateData<Tv>>(*data_);
        shared_ = false;
    }

    const lm::Model* model_;
    std::shared_ptr<StateData<Tv>> data_;
    bool shared_ = false;  // set when this state was resumed from a snapshot
};

template <class Tv>
IncrementalState<Tv> init_state(const lm::Model& model) {
    return IncrementalState<Tv>(model);
}

// State cache files share the checkpoint container format.
void save_state_f32(const IncrementalState<float>& state, const std::string& path);
void save_state_f64(const IncrementalState<double>& state, const std::string& path);
IncrementalState<float> load_state_f32(const lm::Model& model, const std::string& path);
IncrementalState<double> load_state_f64(const lm::Model& model, const std::string& path);

}  // namespace evalm::incr
