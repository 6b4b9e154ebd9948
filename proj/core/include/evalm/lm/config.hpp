#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "evalm/attn/config.hpp"
#include "evalm/attn/cpe.hpp"

namespace evalm::lm {

enum class Precision { kF32, kF64 };

struct ModelConfig {
    int64_t vocab_size = 0;
    int64_t num_layers = 0;
    attn::AttnConfig attn;
    int64_t ffn_multiplier = 4;
    double dropout_rate = 0.1;
    int64_t max_train_len = 0;  // tokens per packed training line
    attn::PositionMode position_mode = attn::PositionMode::kCircular;
    bool tie_embeddings = true;

    void validate() const {
        if (vocab_size <= 0) throw std::invalid_argument("ModelConfig: vocab_size must be positive");
        if (num_layers <= 0) throw std::invalid_argument("ModelConfig: num_layers must be positive");
        if (ffn_multiplier <= 0)
            throw std::invalid_argument("ModelConfig: ffn_multiplier must be positive");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw std::invalid_argument("ModelConfig: dropout_rate must be in [0, 1)");
        if (max_train_len <= 0)
            throw std::invalid_argument("ModelConfig: max_train_len must be positive");
        attn.validate();
    }

    // 350M-class shape from the reference setup: trains at 8192 tokens per line.
    static ModelConfig paper_350m() {
        ModelConfig c;
        c.vocab_size = 50272;
        c.num_layers = 24;
        c.attn = {1024, 16, 128, 8192, attn::PoolingMode::kLearnedQuery};
        c.max_train_len = 8192;
        return c;
    }

    // 1.3B-class shape.
    static ModelConfig paper_1_3b() {
        ModelConfig c;
        c.vocab_size = 50272;
        c.num_layers = 24;
        c.attn = {2048, 32, 128, 8192, attn::PoolingMode::kLearnedQuery};
        c.max_train_len = 8192;
        return c;
    }

    // Workstation-sized preset used throughout the test suites.
    static ModelConfig toy() {
        ModelConfig c;
        c.vocab_size = 512;
        c.num_layers = 4;
        c.attn = {64, 4, 16, 256, attn::PoolingMode::kLearnedQuery};
        c.max_train_len = 256;
        return c;
    }
};

struct TrainConfig {
    double learning_rate = 8e-5;
    double lr_decay_power = 1.0;  // polynomial decay to zero over total_steps
    double dropout = 0.1;
    double weight_decay = 0.1;
    double clip_norm = 1.0;  // global L2
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.95;
    double adam_eps = 1e-8;
    int64_t batch_lines = 4;
    int64_t total_steps = 0;
    uint64_t seed = 0;
    Precision precision = Precision::kF32;

    void validate() const {
        if (learning_rate < 0.0) throw std::invalid_argument("TrainConfig: negative learning rate");
        if (dropout < 0.0 || dropout >= 1.0)
            throw std::invalid_argument("TrainConfig: dropout must be in [0, 1)");
        if (weight_decay < 0.0 || weight_decay > 1.0)
            throw std::invalid_argument("TrainConfig: weight_decay must be in [0, 1]");
        if (clip_norm <= 0.0) throw std::invalid_argument("TrainConfig: clip_norm must be > 0");
        if (batch_lines <= 0) throw std::invalid_argument("TrainConfig: batch_lines must be >= 1");
        if (total_steps <= 0) throw std::invalid_argument("TrainConfig: total_steps must be >= 1");
    }
};

// Polynomial decay from the base rate to exactly zero at the last step.
inline double lr_at_step(const TrainConfig& cfg, int64_t step) {
    if (cfg.total_steps <= 1) return cfg.learning_rate;
    double frac = static_cast<double>(step) / static_cast<double>(cfg.total_steps - 1);
    if (frac > 1.0) frac = 1.0;
    return cfg.learning_rate * std::pow(1.0 - frac, cfg.lr_decay_power);
}

}  // namespace evalm::lm
