#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "evalm/attn/kernels.hpp"
#include "evalm/lm/model.hpp"
#include "evalm/util/rng.hpp"

// Whole-sequence forward pass and its handwritten reverse pass. Templated on
// the scalar: float for training throughput, double for oracle comparisons
// and finite-difference checks. The per-position attention goes through the
// same attend_two / pool_chunk kernels as the incremental encoder, so the two
// paths agree to rounding.

namespace evalm::lm {

namespace detail {

template <class Tv>
void affine(const util::Mat<Tv>& x, const util::Mat<float>& w, const util::Mat<float>* bias,
            util::Mat<Tv>& y) {
    const int64_t n = x.rows, din = x.cols, dout = w.rows;
    y = util::Mat<Tv>(n, dout);
    for (int64_t t = 0; t < n; ++t) {
        const Tv* xr = x.row_ptr(t);
        Tv* yr = y.row_ptr(t);
        for (int64_t o = 0; o < dout; ++o) {
            const float* wr = w.row_ptr(o);
            Tv acc = bias != nullptr ? static_cast<Tv>(bias->data[static_cast<size_t>(o)]) : Tv(0);
            for (int64_t i = 0; i < din; ++i) acc += static_cast<Tv>(wr[i]) * xr[i];
            yr[o] = acc;
        }
    }
}

template <class Tv>
void affine_backward(const util::Mat<Tv>& x, const util::Mat<float>& w, const util::Mat<Tv>& dy,
                     util::Mat<Tv>* dx, util::Mat<Tv>& dw, util::Mat<Tv>* db) {
    const int64_t n = x.rows, din = x.cols, dout = w.rows;
    for (int64_t t = 0; t < n; ++t) {
        const Tv* dyr = dy.row_ptr(t);
        const Tv* xr = x.row_ptr(t);
        Tv* dxr = dx != nullptr ? dx->row_ptr(t) : nullptr;
        for (int64_t o = 0; o < dout; ++o) {
            const Tv g = dyr[o];
            if (g == Tv(0)) continue;
            const float* wr = w.row_ptr(o);
            Tv* dwr = dw.row_ptr(o);
            if (dxr != nullptr) {
                for (int64_t i = 0; i < din; ++i) dxr[i] += g * static_cast<Tv>(wr[i]);
            }
            for (int64_t i = 0; i < din; ++i) dwr[i] += g * xr[i];
        }
        if (db != nullptr) {
            Tv* dbr = db->row_ptr(0);
            for (int64_t o = 0; o < dout; ++o) dbr[o] += dyr[o];
        }
    }
}

inline constexpr double kLnEps = 1e-5;

template <class Tv>
void layernorm(const util::Mat<Tv>& x, const util::Mat<float>& g, const util::Mat<float>& b,
               util::Mat<Tv>& y, std::vector<Tv>& mu, std::vector<Tv>& rstd) {
    const int64_t n = x.rows, d = x.cols;
    y = util::Mat<Tv>(n, d);
    mu.resize(static_cast<size_t>(n));
    rstd.resize(static_cast<size_t>(n));
    for (int64_t t = 0; t < n; ++t) {
        const Tv* xr = x.row_ptr(t);
        Tv m = Tv(0);
        for (int64_t i = 0; i < d; ++i) m += xr[i];
        m /= static_cast<Tv>(d);
        Tv var = Tv(0);
        for (int64_t i = 0; i < d; ++i) {
            const Tv c = xr[i] - m;
            var += c * c;
        }
        var /= static_cast<Tv>(d);
        const Tv r = Tv(1) / std::sqrt(var + static_cast<Tv>(kLnEps));
        mu[static_cast<size_t>(t)] = m;
        rstd[static_cast<size_t>(t)] = r;
        Tv* yr = y.row_ptr(t);
        for (int64_t i = 0; i < d; ++i) {
            yr[i] = (xr[i] - m) * r * static_cast<Tv>(g.data[static_cast<size_t>(i)]) +
                    static_cast<Tv>(b.data[static_cast<size_t>(i)]);
        }
    }
}

template <class Tv>
void layernorm_backward(const util::Mat<Tv>& x, const util::Mat<float>& g,
                        const std::vector<Tv>& mu, const std::vector<Tv>& rstd,
                        const util::Mat<Tv>& dy, util::Mat<Tv>& dx, util::Mat<Tv>& dg,
                        util::Mat<Tv>& db) {
    const int64_t n = x.rows, d = x.cols;
    for (int64_t t = 0; t < n; ++t) {
        const Tv* xr = x.row_ptr(t);
        const Tv* dyr = dy.row_ptr(t);
        Tv* dxr = dx.row_ptr(t);
        const Tv m = mu[static_cast<size_t>(t)];
        const Tv r = rstd[static_cast<size_t>(t)];
        Tv sum_dxhat = Tv(0), sum_dxhat_xhat = Tv(0);
        for (int64_t i = 0; i < d; ++i) {
            const Tv xhat = (xr[i] - m) * r;
            const Tv dxhat = dyr[i] * static_cast<Tv>(g.data[static_cast<size_t>(i)]);
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            dg.data[static_cast<size_t>(i)] += dyr[i] * xhat;
            db.data[static_cast<size_t>(i)] += dyr[i];
        }
        const Tv inv_d = Tv(1) / static_cast<Tv>(d);
        for (int64_t i = 0; i < d; ++i) {
            const Tv xhat = (xr[i] - m) * r;
            const Tv dxhat = dyr[i] * static_cast<Tv>(g.data[static_cast<size_t>(i)]);
            dxr[i] += r * (dxhat - sum_dxhat * inv_d - xhat * sum_dxhat_xhat * inv_d);
        }
    }
}

template <class Tv>
Tv gelu(Tv x) {
    return Tv(0.5) * x * (Tv(1) + std::erf(x / std::numbers::sqrt2_v<Tv>));
}

template <class Tv>
Tv gelu_grad(Tv x) {
    const Tv phi = std::exp(-x * x / Tv(2)) / std::sqrt(Tv(2) * std::numbers::pi_v<Tv>);
    const Tv Phi = Tv(0.5) * (Tv(1) + std::erf(x / std::numbers::sqrt2_v<Tv>));
    return Phi + x * phi;
}

template <class Tv>
void log_softmax_row(Tv* z, int64_t n) {
    Tv m = z[0];
    for (int64_t i = 1; i < n; ++i) m = std::max(m, z[i]);
    Tv sum = Tv(0);
    for (int64_t i = 0; i < n; ++i) sum += std::exp(z[i] - m);
    const Tv lse = m + std::log(sum);
    for (int64_t i = 0; i < n; ++i) z[i] -= lse;
}

// Inverted dropout; masks record kept elements. rng == nullptr disables.
template <class Tv>
void dropout_forward(util::Mat<Tv>& x, double p, util::Rng* rng, std::vector<uint8_t>& mask) {
    if (rng == nullptr || p <= 0.0) {
        mask.clear();
        return;
    }
    const Tv scale = static_cast<Tv>(1.0 / (1.0 - p));
    mask.resize(static_cast<size_t>(x.size()));
    for (int64_t i = 0; i < x.size(); ++i) {
        const bool keep = rng->uniform() >= p;
        mask[static_cast<size_t>(i)] = keep ? 1 : 0;
        x.data[static_cast<size_t>(i)] = keep ? x.data[static_cast<size_t>(i)] * scale : Tv(0);
    }
}

template <class Tv>
void dropout_backward(util::Mat<Tv>& dx, double p, const std::vector<uint8_t>& mask) {
    if (mask.empty()) return;
    const Tv scale = static_cast<Tv>(1.0 / (1.0 - p));
    for (int64_t i = 0; i < dx.size(); ++i) {
        dx.data[static_cast<size_t>(i)] =
            mask[static_cast<size_t>(i)] ? dx.data[static_cast<size_t>(i)] * scale : Tv(0);
    }
}

template <class Tv>
struct LayerFwd {
    util::Mat<Tv> x_in;  // layer input [n, d]
    util::Mat<Tv> a;     // ln1 output
    std::vector<Tv> ln1_mu, ln1_rstd;
    util::Mat<Tv> q, k, v;
    util::Mat<Tv> khat, vhat;  // one row per full chunk
    util::Mat<Tv> poolw;       // [full_chunks * heads, c]
    std::vector<Tv> probs;     // ragged attention weights
    std::vector<int64_t> poff;
    util::Mat<Tv> heads_out;
    std::vector<uint8_t> attn_mask;
    util::Mat<Tv> x_attn;  // residual after attention
    util::Mat<Tv> b;       // ln2 output
    std::vector<Tv> ln2_mu, ln2_rstd;
    util::Mat<Tv> u;  // ffn pre-activation
    util::Mat<Tv> gact;
    std::vector<uint8_t> ffn_mask;
};

template <class Tv>
struct SeqCache {
    util::Mat<Tv> x0;  // embeddings after dropout
    std::vector<uint8_t> embed_mask;
    std::vector<LayerFwd<Tv>> layers;
    util::Mat<Tv> y;  // final layernorm output
    std::vector<Tv> lnf_mu, lnf_rstd;
};

// Attention candidate count for 0-based position p: completed chunks before
// p's chunk plus the local rows up to and including p.
inline int64_t cand_count(int64_t p, int64_t c) { return p / c + p % c + 1; }

template <class Tv>
void attention_layer_forward(const Model& model, const LayerParamsT<float>& L, LayerFwd<Tv>& F,
                             bool keep_probs) {
    const auto& ac = model.config.attn;
    const int64_t n = F.q.rows;
    const int64_t c = ac.chunk_size;
    const int64_t dh = ac.head_dim();
    const int64_t heads = ac.num_heads;
    const int64_t full_chunks = n / c;
    const bool learned = ac.pooling_mode == attn::PoolingMode::kLearnedQuery;

    F.khat = util::Mat<Tv>(full_chunks, ac.model_dim);
    F.vhat = util::Mat<Tv>(full_chunks, ac.model_dim);
    F.poolw = util::Mat<Tv>(full_chunks * heads, c);
    std::vector<Tv> pq(static_cast<size_t>(dh));
    for (int64_t j = 0; j < full_chunks; ++j) {
        for (int64_t h = 0; h < heads; ++h) {
            const Tv* query = nullptr;
            if (learned) {
                for (int64_t i = 0; i < dh; ++i) pq[static_cast<size_t>(i)] = static_cast<Tv>(L.pool_q(h, i));
                query = pq.data();
            }
            attn::RowsView<Tv> kc{F.k.row_ptr(j * c) + h * dh, c, F.k.cols};
            attn::RowsView<Tv> vc{F.v.row_ptr(j * c) + h * dh, c, F.v.cols};
            attn::pool_chunk(kc, vc, query, dh, F.khat.row_ptr(j) + h * dh,
                             F.vhat.row_ptr(j) + h * dh, F.poolw.row_ptr(j * heads + h));
        }
    }

    if (keep_probs) {
        F.poff.assign(static_cast<size_t>(heads * n + 1), 0);
        int64_t total = 0;
        for (int64_t h = 0; h < heads; ++h) {
            for (int64_t p = 0; p < n; ++p) {
                F.poff[static_cast<size_t>(h * n + p)] = total;
                total += cand_count(p, c);
            }
        }
        F.poff[static_cast<size_t>(heads * n)] = total;
        F.probs.resize(static_cast<size_t>(total));
    }

    F.heads_out = util::Mat<Tv>(n, ac.model_dim);
    std::vector<Tv> probs_scratch;
    for (int64_t p = 0; p < n; ++p) {
        const int64_t j = p / c;
        const int64_t s = j * c;
        const int64_t local = p - s + 1;
        for (int64_t h = 0; h < heads; ++h) {
            Tv* probs;
            if (keep_probs) {
                probs = F.probs.data() + F.poff[static_cast<size_t>(h * n + p)];
            } else {
                probs_scratch.resize(static_cast<size_t>(j + local));
                probs = probs_scratch.data();
            }
            attn::RowsView<Tv> rk{j > 0 ? F.khat.data.data() + h * dh : nullptr, j, F.khat.cols};
            attn::RowsView<Tv> rv{j > 0 ? F.vhat.data.data() + h * dh : nullptr, j, F.vhat.cols};
            attn::RowsView<Tv> lk{F.k.row_ptr(s) + h * dh, local, F.k.cols};
            attn::RowsView<Tv> lv{F.v.row_ptr(s) + h * dh, local, F.v.cols};
            attn::attend_two(F.q.row_ptr(p) + h * dh, rk, rv, lk, lv, dh,
                             F.heads_out.row_ptr(p) + h * dh, probs);
        }
    }
}

template <class Tv>
void attention_layer_backward(const Model& model, const LayerParamsT<float>& L,
                              const LayerFwd<Tv>& F, const util::Mat<Tv>& d_heads,
                              util::Mat<Tv>& d_q, util::Mat<Tv>& d_k, util::Mat<Tv>& d_v,
                              util::Mat<Tv>& d_pool_q) {
    const auto& ac = model.config.attn;
    const int64_t n = F.q.rows;
    const int64_t c = ac.chunk_size;
    const int64_t dh = ac.head_dim();
    const int64_t heads = ac.num_heads;
    const int64_t full_chunks = n / c;
    const bool learned = ac.pooling_mode == attn::PoolingMode::kLearnedQuery;

    util::Mat<Tv> d_khat(full_chunks, ac.model_dim), d_vhat(full_chunks, ac.model_dim);
    std::vector<Tv> scratch;
    for (int64_t p = 0; p < n; ++p) {
        const int64_t j = p / c;
        const int64_t s = j * c;
        const int64_t local = p - s + 1;
        for (int64_t h = 0; h < heads; ++h) {
            const Tv* probs = F.probs.data() + F.poff[static_cast<size_t>(h * n + p)];
            attn::RowsView<Tv> rk{j > 0 ? F.khat.data.data() + h * dh : nullptr, j, F.khat.cols};
            attn::RowsView<Tv> rv{j > 0 ? F.vhat.data.data() + h * dh : nullptr, j, F.vhat.cols};
            attn::RowsView<Tv> lk{F.k.row_ptr(s) + h * dh, local, F.k.cols};
            attn::RowsView<Tv> lv{F.v.row_ptr(s) + h * dh, local, F.v.cols};
            attn::MutRowsView<Tv> drk{j > 0 ? d_khat.data.data() + h * dh : nullptr, j,
                                      d_khat.cols};
            attn::MutRowsView<Tv> drv{j > 0 ? d_vhat.data.data() + h * dh : nullptr, j,
                                      d_vhat.cols};
            attn::MutRowsView<Tv> dlk{d_k.row_ptr(s) + h * dh, local, d_k.cols};
            attn::MutRowsView<Tv> dlv{d_v.row_ptr(s) + h * dh, local, d_v.cols};
            attn::attend_two_backward(F.q.row_ptr(p) + h * dh, rk, rv, lk, lv, dh, probs,
                                      d_heads.row_ptr(p) + h * dh, d_q.row_ptr(p) + h * dh, drk,
                                      drv, dlk, dlv, scratch);
        }
    }

    std::vector<Tv> pq(static_cast<size_t>(dh));
    for (int64_t j = 0; j < full_chunks; ++j) {
        for (int64_t h = 0; h < heads; ++h) {
            const Tv* query = nullptr;
            if (learned) {
                for (int64_t i = 0; i < dh; ++i) pq[static_cast<size_t>(i)] = static_cast<Tv>(L.pool_q(h, i));
                query = pq.data();
            }
            attn::RowsView<Tv> kc{F.k.row_ptr(j * c) + h * dh, c, F.k.cols};
            attn::RowsView<Tv> vc{F.v.row_ptr(j * c) + h * dh, c, F.v.cols};
            attn::MutRowsView<Tv> dkc{d_k.row_ptr(j * c) + h * dh, c, d_k.cols};
            attn::MutRowsView<Tv> dvc{d_v.row_ptr(j * c) + h * dh, c, d_v.cols};
            attn::pool_chunk_backward(kc, vc, query, dh, F.poolw.row_ptr(j * heads + h),
                                      d_khat.row_ptr(j) + h * dh, d_vhat.row_ptr(j) + h * dh, dkc,
                                      dvc, learned ? d_pool_q.row_ptr(h) : nullptr, scratch);
        }
    }
}

inline void check_tokens(const Model& model, std::span<const int32_t> tokens) {
    if (tokens.empty()) throw std::invalid_argument("forward_lm: empty token sequence");
    for (int32_t id : tokens) {
        if (id < 0 || id >= model.config.vocab_size)
            throw std::invalid_argument("forward_lm: token id out of vocabulary");
    }
}

// Runs the full stack. When `grads` is null this is a plain evaluation pass
// (no dropout, no caches kept beyond the current layer). With `grads`, NLL
// against next tokens is computed and gradients are accumulated.
template <class Tv>
double run_sequence(const Model& model, std::span<const int32_t> tokens,
                    util::Mat<Tv>* logprobs_out, ParamsT<Tv>* grads, double dropout_p,
                    util::Rng* rng) {
    check_tokens(model, tokens);
    const auto& cfg = model.config;
    const auto& P = model.params;
    const int64_t n = static_cast<int64_t>(tokens.size());
    const int64_t d = cfg.attn.model_dim;
    const bool train = grads != nullptr;

    SeqCache<Tv> C;
    C.x0 = util::Mat<Tv>(n, d);
    for (int64_t p = 0; p < n; ++p) {
        const float* e = P.tok_embed.row_ptr(tokens[static_cast<size_t>(p)]);
        const float* pe =
            P.cpe.row_ptr(attn::position_row(p, cfg.attn.cpe_period, cfg.position_mode));
        Tv* xr = C.x0.row_ptr(p);
        for (int64_t i = 0; i < d; ++i) xr[i] = static_cast<Tv>(e[i]) + static_cast<Tv>(pe[i]);
    }
    dropout_forward(C.x0, dropout_p, train ? rng : nullptr, C.embed_mask);

    C.layers.resize(static_cast<size_t>(cfg.num_layers));
    util::Mat<Tv> x = C.x0;
    for (int64_t l = 0; l < cfg.num_layers; ++l) {
        auto& F = C.layers[static_cast<size_t>(l)];
        const auto& L = P.layers[static_cast<size_t>(l)];
        if (train) F.x_in = x;

        layernorm(x, L.ln1_g, L.ln1_b, F.a, F.ln1_mu, F.ln1_rstd);
        affine(F.a, L.wq, &L.bq, F.q);
        affine(F.a, L.wk, &L.bk, F.k);
        affine(F.a, L.wv, &L.bv, F.v);
        attention_layer_forward(model, L, F, train);

        util::Mat<Tv> proj;
        affine(F.heads_out, L.wo, &L.bo, proj);
        dropout_forward(proj, dropout_p, train ? rng : nullptr, F.attn_mask);
        for (int64_t i = 0; i < x.size(); ++i) x.data[static_cast<size_t>(i)] += proj.data[static_cast<size_t>(i)];
        if (train) F.x_attn = x;

        layernorm(x, L.ln2_g, L.ln2_b, F.b, F.ln2_mu, F.ln2_rstd);
        affine(F.b, L.w1, &L.b1, F.u);
        F.gact = util::Mat<Tv>(F.u.rows, F.u.cols);
        for (int64_t i = 0; i < F.u.size(); ++i)
            F.gact.data[static_cast<size_t>(i)] = gelu(F.u.data[static_cast<size_t>(i)]);
        util::Mat<Tv> ffn;
        affine(F.gact, L.w2, &L.b2, ffn);
        dropout_forward(ffn, dropout_p, train ? rng : nullptr, F.ffn_mask);
        for (int64_t i = 0; i < x.size(); ++i) x.data[static_cast<size_t>(i)] += ffn.data[static_cast<size_t>(i)];

        if (!train) {
            F.a = {};
            F.q = {};
            F.k = {};
            F.v = {};
            F.khat = {};
            F.vhat = {};
            F.poolw = {};
            F.heads_out = {};
            F.u = {};
            F.gact = {};
            F.b = {};
        }
    }

    layernorm(x, P.lnf_g, P.lnf_b, C.y, C.lnf_mu, C.lnf_rstd);

    const util::Mat<float>& head = cfg.tie_embeddings ? P.tok_embed : P.head;
    util::Mat<Tv> logprobs;
    affine(C.y, head, nullptr, logprobs);
    for (int64_t p = 0; p < n; ++p) log_softmax_row(logprobs.row_ptr(p), cfg.vocab_size);

    double loss = 0.0;
    if (train) {
        const int64_t npred = n - 1;
        if (npred < 1)
            throw std::invalid_argument("loss requires at least two tokens per line");
        util::Mat<Tv> dlogits(n, cfg.vocab_size);
        const Tv inv = Tv(1) / static_cast<Tv>(npred);
        for (int64_t p = 0; p < npred; ++p) {
            const int32_t target = tokens[static_cast<size_t>(p + 1)];
            loss -= static_cast<double>(logprobs(p, target));
            const Tv* lp = logprobs.row_ptr(p);
            Tv* dl = dlogits.row_ptr(p);
            for (int64_t vv = 0; vv < cfg.vocab_size; ++vv) dl[vv] = std::exp(lp[vv]) * inv;
            dl[target] -= inv;
        }
        loss /= static_cast<double>(npred);

        // ---- reverse pass ----
        util::Mat<Tv>& d_embed = cfg.tie_embeddings ? grads->tok_embed : grads->head;
        util::Mat<Tv> dy(n, d);
        affine_backward(C.y, head, dlogits, &dy, d_embed, static_cast<util::Mat<Tv>*>(nullptr));

        util::Mat<Tv> dx(n, d);
        layernorm_backward(x, P.lnf_g, C.lnf_mu, C.lnf_rstd, dy, dx, grads->lnf_g, grads->lnf_b);

        for (int64_t l = cfg.num_layers - 1; l >= 0; --l) {
            auto& F = C.layers[static_cast<size_t>(l)];
            const auto& L = P.layers[static_cast<size_t>(l)];
            auto& G = grads->layers[static_cast<size_t>(l)];

            // FFN branch.
            util::Mat<Tv> dffn = dx;  // residual: gradient flows to both paths
            dropout_backward(dffn, dropout_p, F.ffn_mask);
            util::Mat<Tv> dgact(F.gact.rows, F.gact.cols);
            affine_backward(F.gact, L.w2, dffn, &dgact, G.w2, &G.b2);
            util::Mat<Tv> du(F.u.rows, F.u.cols);
            for (int64_t i = 0; i < F.u.size(); ++i)
                du.data[static_cast<size_t>(i)] =
                    dgact.data[static_cast<size_t>(i)] * gelu_grad(F.u.data[static_cast<size_t>(i)]);
            util::Mat<Tv> db_ln2(F.b.rows, F.b.cols);
            affine_backward(F.b, L.w1, du, &db_ln2, G.w1, &G.b1);
            layernorm_backward(F.x_attn, L.ln2_g, F.ln2_mu, F.ln2_rstd, db_ln2, dx, G.ln2_g,
                               G.ln2_b);

            // Attention branch.
            util::Mat<Tv> dproj = dx;
            dropout_backward(dproj, dropout_p, F.attn_mask);
            util::Mat<Tv> d_heads(n, d);
            affine_backward(F.heads_out, L.wo, dproj, &d_heads, G.wo, &G.bo);

            util::Mat<Tv> d_q(n, d), d_k(n, d), d_v(n, d);
            attention_layer_backward(model, L, F, d_heads, d_q, d_k, d_v, G.pool_q);

            util::Mat<Tv> da(n, d);
            affine_backward(F.a, L.wq, d_q, &da, G.wq, &G.bq);
            affine_backward(F.a, L.wk, d_k, &da, G.wk, &G.bk);
            affine_backward(F.a, L.wv, d_v, &da, G.wv, &G.bv);
            layernorm_backward(F.x_in, L.ln1_g, F.ln1_mu, F.ln1_rstd, da, dx, G.ln1_g, G.ln1_b);
        }

        dropout_backward(dx, dropout_p, C.embed_mask);
        for (int64_t p = 0; p < n; ++p) {
            const Tv* dxr = dx.row_ptr(p);
            Tv* de = grads->tok_embed.row_ptr(tokens[static_cast<size_t>(p)]);
            Tv* dpe = grads->cpe.row_ptr(
                attn::position_row(p, cfg.attn.cpe_period, cfg.position_mode));
            for (int64_t i = 0; i < d; ++i) {
                de[i] += dxr[i];
                dpe[i] += dxr[i];
            }
        }
    }

    if (logprobs_out != nullptr) *logprobs_out = std::move(logprobs);
    return loss;
}

}  // namespace detail

// Per-position next-token log-probabilities for the whole sequence
// (evaluation mode: dropout off). Row p conditions on tokens[0..p].
template <class Tv>
util::Mat<Tv> forward_lm(const Model& model, std::span<const int32_t> tokens) {
    util::Mat<Tv> out;
    detail::run_sequence<Tv>(model, tokens, &out, nullptr, 0.0, nullptr);
    return out;
}

// Mean next-token NLL of one packed line; gradients are accumulated into
// `grads` (which must match the model's shapes).
template <class Tv>
double line_loss_and_grad(const Model& model, std::span<const int32_t> tokens, ParamsT<Tv>& grads,
                          double dropout_p, util::Rng& rng) {
    return detail::run_sequence<Tv>(model, tokens, nullptr, &grads, dropout_p, &rng);
}

}  // namespace evalm::lm
