#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evalm/lm/config.hpp"
#include "evalm/util/matrix.hpp"
#include "evalm/util/rng.hpp"

namespace evalm::lm {

// One tensor set. Instantiated with float for the live parameters and with
// float/double for gradient and optimizer-moment buffers.
template <class T>
struct LayerParamsT {
    util::Mat<T> ln1_g, ln1_b;
    util::Mat<T> wq, bq, wk, bk, wv, bv;  // weights are [out, in]; y = x . W^T + b
    util::Mat<T> pool_q;                  // num_heads x head_dim pooling queries
    util::Mat<T> wo, bo;
    util::Mat<T> ln2_g, ln2_b;
    util::Mat<T> w1, b1, w2, b2;
};

template <class T>
struct ParamsT {
    util::Mat<T> tok_embed;  // vocab x d
    util::Mat<T> cpe;        // cpe_period x d
    std::vector<LayerParamsT<T>> layers;
    util::Mat<T> lnf_g, lnf_b;
    util::Mat<T> head;  // vocab x d; empty when tied to tok_embed
};

// Visits every learned tensor in the declared checkpoint order. This is the
// single source of truth for that order: checkpoints, gradient buffers and
// optimizer state all iterate through here.
template <class T, class F>
void for_each_tensor(ParamsT<T>& p, F&& f) {
    f("tok_embed", p.tok_embed);
    f("cpe", p.cpe);
    for (size_t l = 0; l < p.layers.size(); ++l) {
        auto& L = p.layers[l];
        const std::string pre = "layer" + std::to_string(l) + ".";
        f(pre + "ln1_g", L.ln1_g);
        f(pre + "ln1_b", L.ln1_b);
        f(pre + "wq", L.wq);
        f(pre + "bq", L.bq);
        f(pre + "wk", L.wk);
        f(pre + "bk", L.bk);
        f(pre + "wv", L.wv);
        f(pre + "bv", L.bv);
        f(pre + "pool_q", L.pool_q);
        f(pre + "wo", L.wo);
        f(pre + "bo", L.bo);
        f(pre + "ln2_g", L.ln2_g);
        f(pre + "ln2_b", L.ln2_b);
        f(pre + "w1", L.w1);
        f(pre + "b1", L.b1);
        f(pre + "w2", L.w2);
        f(pre + "b2", L.b2);
    }
    f("lnf_g", p.lnf_g);
    f("lnf_b", p.lnf_b);
    if (!p.head.empty()) f("head", p.head);
}

template <class T, class F>
void for_each_tensor(const ParamsT<T>& p, F&& f) {
    for_each_tensor(const_cast<ParamsT<T>&>(p), [&](const std::string& name, util::Mat<T>& m) {
        f(name, static_cast<const util::Mat<T>&>(m));
    });
}

// Allocates a zeroed tensor set with the same shapes as `like`.
template <class T, class U>
ParamsT<T> zeros_like(const ParamsT<U>& like) {
    ParamsT<T> out;
    out.layers.resize(like.layers.size());
    auto shape = [](const util::Mat<U>& src) { return util::Mat<T>(src.rows, src.cols); };
    out.tok_embed = shape(like.tok_embed);
    out.cpe = shape(like.cpe);
    for (size_t l = 0; l < like.layers.size(); ++l) {
        const auto& s = like.layers[l];
        auto& d = out.layers[l];
        d.ln1_g = shape(s.ln1_g);
        d.ln1_b = shape(s.ln1_b);
        d.wq = shape(s.wq);
        d.bq = shape(s.bq);
        d.wk = shape(s.wk);
        d.bk = shape(s.bk);
        d.wv = shape(s.wv);
        d.bv = shape(s.bv);
        d.pool_q = shape(s.pool_q);
        d.wo = shape(s.wo);
        d.bo = shape(s.bo);
        d.ln2_g = shape(s.ln2_g);
        d.ln2_b = shape(s.ln2_b);
        d.w1 = shape(s.w1);
        d.b1 = shape(s.b1);
        d.w2 = shape(s.w2);
        d.b2 = shape(s.b2);
    }
    out.lnf_g = shape(like.lnf_g);
    out.lnf_b = shape(like.lnf_b);
    if (!like.head.empty()) out.head = shape(like.head);
    return out;
}

struct Model {
    ModelConfig config;
    ParamsT<float> params;

    // Fresh normal(0, 0.02) initialization; residual output projections are
    // scaled down by 1/sqrt(2 * num_layers) and the head is tied to the
    // token embedding unless configured otherwise.
    void init(uint64_t seed);

    int64_t num_params() const;
    uint64_t config_digest() const;
};

std::string to_string(attn::PositionMode mode);
attn::PositionMode position_mode_from_string(const std::string& s);

}  // namespace evalm::lm
