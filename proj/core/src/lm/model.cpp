#include "evalm/lm/model.hpp"

#include <cmath>

#include "evalm/util/hash.hpp"

namespace evalm::lm {

namespace {

void fill_normal(util::Mat<float>& m, util::Rng& rng, double stddev) {
    for (auto& v : m.data) v = static_cast<float>(rng.normal() * stddev);
}

}  // namespace

void Model::init(uint64_t seed) {
    config.validate();
    const int64_t d = config.attn.model_dim;
    const int64_t f = config.ffn_multiplier * d;
    const int64_t heads = config.attn.num_heads;
    const int64_t dh = config.attn.head_dim();

    util::Rng rng = util::Rng::derive(seed, {0x11});
    const double base_std = 0.02;
    const double resid_std = base_std / std::sqrt(2.0 * static_cast<double>(config.num_layers));

    params = ParamsT<float>{};
    params.tok_embed = util::Mat<float>(config.vocab_size, d);
    fill_normal(params.tok_embed, rng, base_std);
    params.cpe = util::Mat<float>(config.attn.cpe_period, d);
    fill_normal(params.cpe, rng, base_std);

    params.layers.resize(static_cast<size_t>(config.num_layers));
    for (auto& L : params.layers) {
        L.ln1_g = util::Mat<float>(1, d, 1.0f);
        L.ln1_b = util::Mat<float>(1, d, 0.0f);
        L.wq = util::Mat<float>(d, d);
        fill_normal(L.wq, rng, base_std);
        L.bq = util::Mat<float>(1, d, 0.0f);
        L.wk = util::Mat<float>(d, d);
        fill_normal(L.wk, rng, base_std);
        L.bk = util::Mat<float>(1, d, 0.0f);
        L.wv = util::Mat<float>(d, d);
        fill_normal(L.wv, rng, base_std);
        L.bv = util::Mat<float>(1, d, 0.0f);
        L.pool_q = util::Mat<float>(heads, dh);
        fill_normal(L.pool_q, rng, base_std);
        L.wo = util::Mat<float>(d, d);
        fill_normal(L.wo, rng, resid_std);
        L.bo = util::Mat<float>(1, d, 0.0f);
        L.ln2_g = util::Mat<float>(1, d, 1.0f);
        L.ln2_b = util::Mat<float>(1, d, 0.0f);
        L.w1 = util::Mat<float>(f, d);
        fill_normal(L.w1, rng, base_std);
        L.b1 = util::Mat<float>(1, f, 0.0f);
        L.w2 = util::Mat<float>(d, f);
        fill_normal(L.w2, rng, resid_std);
        L.b2 = util::Mat<float>(1, d, 0.0f);
    }

    params.lnf_g = util::Mat<float>(1, d, 1.0f);
    params.lnf_b = util::Mat<float>(1, d, 0.0f);
    if (!config.tie_embeddings) {
        params.head = util::Mat<float>(config.vocab_size, d);
        fill_normal(params.head, rng, base_std);
    }
}

int64_t Model::num_params() const {
    int64_t n = 0;
    for_each_tensor(params, [&](const std::string&, const util::Mat<float>& m) { n += m.size(); });
    return n;
}

uint64_t Model::config_digest() const {
    util::Fnv64 f;
    f.update("evalm-config-v1");
    f.update_value(config.vocab_size);
    f.update_value(config.num_layers);
    f.update_value(config.attn.model_dim);
    f.update_value(config.attn.num_heads);
    f.update_value(config.attn.chunk_size);
    f.update_value(config.attn.cpe_period);
    f.update_value(static_cast<int32_t>(config.attn.pooling_mode));
    f.update_value(config.ffn_multiplier);
    f.update_value(config.max_train_len);
    f.update_value(static_cast<int32_t>(config.position_mode));
    f.update_value(static_cast<int32_t>(config.tie_embeddings));
    return f.digest();
}

std::string to_string(attn::PositionMode mode) {
    return mode == attn::PositionMode::kCircular ? "circular" : "clamped";
}

attn::PositionMode position_mode_from_string(const std::string& s) {
    if (s == "circular") return attn::PositionMode::kCircular;
    if (s == "clamped") return attn::PositionMode::kClamped;
    throw std::invalid_argument("unknown position mode: " + s);
}

}  // namespace evalm::lm
