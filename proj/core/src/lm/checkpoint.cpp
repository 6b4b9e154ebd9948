#include "evalm/lm/checkpoint.hpp"

#include <stdexcept>

#include "../container.hpp"

namespace evalm::lm {

namespace {

nlohmann::json config_to_json(const ModelConfig& c) {
    return nlohmann::json{
        {"vocab_size", c.vocab_size},
        {"num_layers", c.num_layers},
        {"model_dim", c.attn.model_dim},
        {"num_heads", c.attn.num_heads},
        {"chunk_size", c.attn.chunk_size},
        {"cpe_period", c.attn.cpe_period},
        {"pooling_mode", attn::to_string(c.attn.pooling_mode)},
        {"ffn_multiplier", c.ffn_multiplier},
        {"dropout_rate", c.dropout_rate},
        {"max_train_len", c.max_train_len},
        {"position_mode", to_string(c.position_mode)},
        {"tie_embeddings", c.tie_embeddings},
    };
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<int64_t>();
    c.num_layers = j.at("num_layers").get<int64_t>();
    c.attn.model_dim = j.at("model_dim").get<int64_t>();
    c.attn.num_heads = j.at("num_heads").get<int64_t>();
    c.attn.chunk_size = j.at("chunk_size").get<int64_t>();
    c.attn.cpe_period = j.at("cpe_period").get<int64_t>();
    c.attn.pooling_mode = attn::pooling_mode_from_string(j.at("pooling_mode").get<std::string>());
    c.ffn_multiplier = j.at("ffn_multiplier").get<int64_t>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.max_train_len = j.at("max_train_len").get<int64_t>();
    c.position_mode = position_mode_from_string(j.at("position_mode").get<std::string>());
    c.tie_embeddings = j.at("tie_embeddings").get<bool>();
    return c;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    nlohmann::json header;
    header["kind"] = "checkpoint";
    header["config"] = config_to_json(model.config);
    header["config_digest"] = model.config_digest();

    nlohmann::json tensors = nlohmann::json::array();
    std::vector<io::TensorBlob> blobs;
    for_each_tensor(model.params, [&](const std::string& name, const util::Mat<float>& m) {
        tensors.push_back({{"name", name}, {"rows", m.rows}, {"cols", m.cols}});
        blobs.push_back({m.data.data(), m.data.size() * sizeof(float)});
    });
    header["tensors"] = tensors;
    io::write_container(path, header, blobs);
}

Model load_checkpoint(const std::string& path) {
    io::Container c = io::read_container(path);
    if (c.header.at("kind") != "checkpoint")
        throw std::runtime_error("not a checkpoint file: " + path);

    Model model;
    model.config = config_from_json(c.header.at("config"));
    model.config.validate();
    if (c.header.at("config_digest").get<uint64_t>() != model.config_digest())
        throw std::runtime_error("checkpoint header digest mismatch: " + path);

    // Allocate shapes from the config, then fill from the payload while
    // checking the header's declared shapes.
    model.init(0);
    size_t offset = 0;
    size_t idx = 0;
    const auto& tensors = c.header.at("tensors");
    for_each_tensor(model.params, [&](const std::string& name, util::Mat<float>& m) {
        if (idx >= tensors.size()) throw std::runtime_error("checkpoint missing tensors: " + path);
        const auto& tj = tensors.at(idx++);
        if (tj.at("name") != name || tj.at("rows") != m.rows || tj.at("cols") != m.cols)
            throw std::runtime_error("checkpoint tensor shape mismatch at " + name);
        const size_t bytes = m.data.size() * sizeof(float);
        if (offset + bytes > c.payload.size())
            throw std::runtime_error("checkpoint payload truncated: " + path);
        std::memcpy(m.data.data(), c.payload.data() + offset, bytes);
        offset += bytes;
    });
    if (idx != tensors.size() || offset != c.payload.size())
        throw std::runtime_error("checkpoint payload size mismatch: " + path);
    return model;
}

}  // namespace evalm::lm
