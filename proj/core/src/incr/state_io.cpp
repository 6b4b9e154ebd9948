#include <cstring>

#include "../container.hpp"
#include "evalm/incr/state.hpp"

namespace evalm::incr {

namespace {

template <class Tv>
void save_state_impl(const IncrementalState<Tv>& state, const std::string& path,
                     const char* dtype) {
    const StateData<Tv>& s = state.data();
    nlohmann::json header;
    header["kind"] = "state";
    header["dtype"] = dtype;
    header["t"] = s.t;
    header["config_digest"] = s.config_digest;

    nlohmann::json tensors = nlohmann::json::array();
    std::vector<io::TensorBlob> blobs;
    for (size_t l = 0; l < s.layers.size(); ++l) {
        const auto& L = s.layers[l];
        auto add = [&](const char* name, const util::Mat<Tv>& m) {
            tensors.push_back({{"name", "layer" + std::to_string(l) + "." + name},
                               {"rows", m.rows},
                               {"cols", m.cols}});
            blobs.push_back({m.data.data(), m.data.size() * sizeof(Tv)});
        };
        add("local_k", L.local_k);
        add("local_v", L.local_v);
        add("remote_k", L.remote_k);
        add("remote_v", L.remote_v);
    }
    header["tensors"] = tensors;
    io::write_container(path, header, blobs);
}

template <class Tv>
IncrementalState<Tv> load_state_impl(const lm::Model& model, const std::string& path,
                                     const char* dtype) {
    io::Container c = io::read_container(path);
    if (c.header.at("kind") != "state") throw std::runtime_error("not a state cache: " + path);
    if (c.header.at("dtype") != dtype)
        throw std::runtime_error("state cache precision mismatch: " + path);

    auto data = std::make_shared<StateData<Tv>>();
    data->t = c.header.at("t").get<int64_t>();
    data->config_digest = c.header.at("config_digest").get<uint64_t>();
    data->layers.resize(static_cast<size_t>(model.config.num_layers));

    size_t offset = 0;
    size_t idx = 0;
    const auto& tensors = c.header.at("tensors");
    for (size_t l = 0; l < data->layers.size(); ++l) {
        auto& L = data->layers[l];
        auto take = [&](util::Mat<Tv>& m) {
            const auto& tj = tensors.at(idx++);
            m = util::Mat<Tv>(tj.at("rows").get<int64_t>(), tj.at("cols").get<int64_t>());
            const size_t bytes = m.data.size() * sizeof(Tv);
            if (offset + bytes > c.payload.size())
                throw std::runtime_error("state cache payload truncated: " + path);
            std::memcpy(m.data.data(), c.payload.data() + offset, bytes);
            offset += bytes;
        };
        take(L.local_k);
        take(L.local_v);
        take(L.remote_k);
        take(L.remote_v);
    }
    if (offset != c.payload.size())
        throw std::runtime_error("state cache payload size mismatch: " + path);
    return IncrementalState<Tv>::adopt(model, std::move(data));
}

}  // namespace

void save_state_f32(const IncrementalState<float>& state, const std::string& path) {
    save_state_impl(state, path, "f32");
}
void save_state_f64(const IncrementalState<double>& state, const std::string& path) {
    save_state_impl(state, path, "f64");
}
IncrementalState<float> load_state_f32(const lm::Model& model, const std::string& path) {
    return load_state_impl<float>(model, path, "f32");
}
IncrementalState<double> load_state_f64(const lm::Model& model, const std::string& path) {
    return load_state_impl<double>(model, path, "f64");
}

}  // namespace evalm::incr
